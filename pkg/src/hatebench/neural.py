"""Tokenizer, CNN-BiLSTM assembly and the training loop.

The tokenizer is fitted on training documents only (pad id 0, OOV id 1,
content ids from 2 ranked by frequency). Training iterates seeded shuffled
mini-batches, monitors validation loss each epoch and stops once the loss
fails to improve for more than ``patience`` consecutive epochs, restoring
the best-epoch parameters.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import CheckpointError, TrainingError
from .evaluation import auc
from .numerics import (
    Adam,
    BiLstm,
    Conv1d,
    Embedding,
    MaskedPool,
    Param,
    SigmoidDense,
    bce_loss,
    zero_grads,
)
from .seeding import derive_seed

PAD_ID = 0
OOV_ID = 1


@dataclass(frozen=True)
class TokenizerState:
    token_to_id: dict[str, int]  # content ids only, starting at 2

    @property
    def vocab_size(self) -> int:
        return len(self.token_to_id) + 2

    def encode_token(self, token: str) -> int:
        return self.token_to_id.get(token, OOV_ID)


@dataclass(frozen=True)
class PaddedSequence:
    ids: tuple[int, ...]  # fixed length, post-padded with 0
    true_length: int


@dataclass(frozen=True)
class ModelConfig:
    embedding_dim: int = 100
    max_len: int = 50
    filters: int = 64
    kernel: int = 3
    lstm_units: int = 50
    dropout: float = 0.2
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 20
    patience: int = 3
    seed: int = 13
    val_fraction: float = 0.1
    max_vocab: int = 20000
    pooling: str = "max"

    def __post_init__(self):
        for name in ("embedding_dim", "max_len", "filters", "kernel", "lstm_units",
                     "batch_size", "max_epochs", "max_vocab"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.patience < 0:
            raise ValueError("patience must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must be in (0, 1)")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.kernel % 2 == 0:
            raise ValueError("kernel size must be odd")
        if self.pooling not in ("max", "last"):
            raise ValueError(f"unknown pooling mode {self.pooling!r}")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    train_auc: float | None
    val_loss: float
    val_auc: float | None


@dataclass(frozen=True)
class TrainingLog:
    epochs: list[EpochRecord]
    best_epoch: int


def fit_tokenizer(train_docs, max_vocab: int = 20000) -> TokenizerState:
    """Rank tokens by training frequency (ties lexicographic) and keep the
    ``max_vocab - 2`` most frequent."""
    docs = list(train_docs)
    if not docs:
        raise ValueError("cannot fit a tokenizer on an empty document list")
    freq: Counter[str] = Counter()
    for doc in docs:
        freq.update(doc.tokens)
    ranked = sorted(freq, key=lambda tok: (-freq[tok], tok))[:max(0, max_vocab - 2)]
    return TokenizerState(token_to_id={tok: i + 2 for i, tok in enumerate(ranked)})


def encode_pad(doc, tokenizer: TokenizerState, max_len: int) -> PaddedSequence:
    """First ``max_len`` tokens mapped to ids, post-padded with the pad id."""
    ids = [tokenizer.encode_token(tok) for tok in list(doc.tokens)[:max_len]]
    true_length = len(ids)
    ids.extend([PAD_ID] * (max_len - true_length))
    return PaddedSequence(ids=tuple(ids), true_length=true_length)


def encode_batch(docs, tokenizer: TokenizerState, max_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Id and mask arrays for a document batch; rows follow doc order."""
    seqs = [encode_pad(doc, tokenizer, max_len) for doc in docs]
    ids = np.array([s.ids for s in seqs], dtype=np.int64).reshape(len(seqs), max_len)
    mask = (ids != PAD_ID).astype(np.float64)
    return ids, mask


class CnnBiLstm:
    """Embedding -> same-length convolution -> BiLSTM -> masked pooling -> sigmoid.

    Dropout (inverted scaling) applies to the convolution output and to the
    pooled representation during training only.
    """

    def __init__(self, config: ModelConfig, vocab_size: int):
        if vocab_size < 2:
            raise ValueError("vocab_size must cover at least pad and OOV")
        self.config = config
        self.vocab_size = vocab_size
        rng = np.random.default_rng(derive_seed(config.seed, "init"))
        self.embedding = Embedding(vocab_size, config.embedding_dim, rng)
        self.conv = Conv1d(config.kernel, config.embedding_dim, config.filters, rng)
        self.bilstm = BiLstm(config.filters, config.lstm_units, rng)
        self.pool = MaskedPool(config.pooling)
        self.head = SigmoidDense(2 * config.lstm_units, rng)

    def parameters(self) -> list[Param]:
        return ([self.embedding.table] + [self.conv.w, self.conv.b]
                + self.bilstm.params() + self.head.params())

    def zero_grads(self) -> None:
        zero_grads(self.parameters())

    def forward(self, ids: np.ndarray, mask: np.ndarray, *, training: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        drop = self.config.dropout if training else 0.0
        embedded = self.embedding.forward(ids)
        conv_out = self.conv.forward(embedded)
        self._conv_keep = None
        self._pool_keep = None
        if drop > 0.0:
            self._conv_keep = (rng.random(conv_out.shape) >= drop) / (1.0 - drop)
            conv_out = conv_out * self._conv_keep
        hseq = self.bilstm.forward(conv_out, mask)
        pooled = self.pool.forward(hseq, mask)
        if drop > 0.0:
            self._pool_keep = (rng.random(pooled.shape) >= drop) / (1.0 - drop)
            pooled = pooled * self._pool_keep
        return self.head.forward(pooled)

    def backward(self, grad_y: np.ndarray) -> None:
        grad_pooled = self.head.backward(grad_y)
        if self._pool_keep is not None:
            grad_pooled = grad_pooled * self._pool_keep
        grad_hseq = self.pool.backward(grad_pooled)
        grad_conv = self.bilstm.backward(grad_hseq)
        if self._conv_keep is not None:
            grad_conv = grad_conv * self._conv_keep
        grad_embedded = self.conv.backward(grad_conv)
        self.embedding.backward(grad_embedded)

    def snapshot(self) -> list[np.ndarray]:
        return [p.value.copy() for p in self.parameters()]

    def restore(self, snapshot: list[np.ndarray]) -> None:
        for p, value in zip(self.parameters(), snapshot):
            p.value[...] = value


def build_model(config: ModelConfig, vocab_size: int) -> CnnBiLstm:
    """Seeded construction; two builds with equal seed are identical."""
    return CnnBiLstm(config, vocab_size)


def predict_proba(model: CnnBiLstm, ids: np.ndarray, mask: np.ndarray,
                  batch_size: int = 256) -> np.ndarray:
    """Deterministic eval-mode probabilities, one per sequence."""
    if ids.shape[0] and not mask.sum(axis=1).all():
        bad = int(np.flatnonzero(mask.sum(axis=1) == 0)[0])
        raise ValueError(f"all-pad sequence at row {bad}")
    out = np.empty(ids.shape[0])
    for start in range(0, ids.shape[0], batch_size):
        stop = start + batch_size
        out[start:stop] = model.forward(ids[start:stop], mask[start:stop])
    return out


def _safe_auc(y, scores) -> float | None:
    y = np.asarray(y)
    if (y == 1).any() and (y == 0).any():
        return auc(y, scores)
    return None


def train_model(model: CnnBiLstm, train_set, val_set) -> TrainingLog:
    """Train with early stopping on validation loss; the model ends up
    holding the best-epoch parameters.

    ``train_set`` and ``val_set`` are (ids, mask, labels) triples. Stops
    once validation loss has not improved for more than ``patience``
    consecutive epochs.
    """
    ids_tr, mask_tr, y_tr = train_set
    ids_va, mask_va, y_va = val_set
    if ids_tr.shape[0] == 0 or ids_va.shape[0] == 0:
        raise ValueError("training and validation sets must be non-empty")
    for name, mask in (("training", mask_tr), ("validation", mask_va)):
        if not mask.sum(axis=1).all():
            raise ValueError(f"{name} set contains an all-pad sequence; reject at ingestion")
    config = model.config
    y_tr = np.asarray(y_tr, dtype=np.float64)
    y_va = np.asarray(y_va, dtype=np.float64)

    shuffle_rng = np.random.default_rng(derive_seed(config.seed, "shuffle"))
    dropout_rng = np.random.default_rng(derive_seed(config.seed, "dropout"))
    optimizer = Adam(model.parameters(), lr=config.learning_rate)

    n = ids_tr.shape[0]
    records: list[EpochRecord] = []
    best_val = np.inf
    best_epoch = -1
    best_state = model.snapshot()
    strikes = 0

    for epoch in range(config.max_epochs):
        order = shuffle_rng.permutation(n)
        epoch_scores = np.empty(n)
        loss_sum = 0.0
        for batch_no, start in enumerate(range(0, n, config.batch_size)):
            batch = order[start:start + config.batch_size]
            model.zero_grads()
            y_hat = model.forward(ids_tr[batch], mask_tr[batch],
                                  training=True, rng=dropout_rng)
            loss, grad = bce_loss(y_hat, y_tr[batch])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {batch_no}")
            model.backward(grad)
            optimizer.step()
            loss_sum += loss * batch.size
            epoch_scores[batch] = y_hat

        val_hat = predict_proba(model, ids_va, mask_va)
        val_loss, _ = bce_loss(val_hat, y_va)
        records.append(EpochRecord(
            epoch=epoch,
            train_loss=loss_sum / n,
            train_auc=_safe_auc(y_tr, epoch_scores),
            val_loss=val_loss,
            val_auc=_safe_auc(y_va, val_hat),
        ))
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_state = model.snapshot()
            strikes = 0
        else:
            strikes += 1
            if strikes > config.patience:
                break

    model.restore(best_state)
    return TrainingLog(epochs=records, best_epoch=best_epoch)


def write_curves_csv(log: TrainingLog, path: str | Path) -> None:
    lines = ["epoch,train_loss,val_loss,train_auc,val_auc"]
    for rec in log.epochs:
        t_auc = "" if rec.train_auc is None else repr(rec.train_auc)
        v_auc = "" if rec.val_auc is None else repr(rec.val_auc)
        lines.append(f"{rec.epoch},{rec.train_loss!r},{rec.val_loss!r},{t_auc},{v_auc}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def curve_rows(log: TrainingLog) -> list[dict]:
    return [asdict(rec) for rec in log.epochs]


def save_checkpoint(path: str | Path, model: CnnBiLstm, tokenizer: TokenizerState) -> None:
    """Self-describing container: config header, tokenizer and named arrays."""
    meta = {"config": asdict(model.config), "vocab_size": model.vocab_size}
    tokens = sorted(tokenizer.token_to_id, key=tokenizer.token_to_id.get)
    # byte order pinned little-endian so checkpoints are portable
    arrays = {f"param_{p.name}": p.value.astype("<f8") for p in model.parameters()}
    np.savez(path, meta=np.array(json.dumps(meta, sort_keys=True)),
             tokens=np.array(tokens, dtype=np.str_), **arrays)


def load_checkpoint(path: str | Path, config: ModelConfig | None = None
                    ) -> tuple[CnnBiLstm, TokenizerState]:
    """Rebuild model and tokenizer; every array shape is validated and a
    mismatch error names the offending array."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as bundle:
        meta = json.loads(str(bundle["meta"]))
        stored_config = ModelConfig(**meta["config"])
        if config is not None:
            mismatched = {
                name for name in ("embedding_dim", "max_len", "filters", "kernel",
                                  "lstm_units", "pooling")
                if getattr(config, name) != getattr(stored_config, name)
            }
            if mismatched:
                raise CheckpointError(
                    f"checkpoint architecture differs from run config in: {sorted(mismatched)}"
                )
        tokens = [str(tok) for tok in bundle["tokens"]]
        tokenizer = TokenizerState(token_to_id={tok: i + 2 for i, tok in enumerate(tokens)})
        if tokenizer.vocab_size != meta["vocab_size"]:
            raise CheckpointError(
                f"checkpoint array 'embedding': vocabulary has {tokenizer.vocab_size} ids "
                f"but header says {meta['vocab_size']}"
            )
        model = CnnBiLstm(stored_config, meta["vocab_size"])
        for p in model.parameters():
            key = f"param_{p.name}"
            if key not in bundle:
                raise CheckpointError(f"checkpoint array {p.name!r} is missing")
            stored = bundle[key]
            if stored.shape != p.value.shape:
                raise CheckpointError(
                    f"checkpoint array {p.name!r}: expected shape {p.value.shape}, "
                    f"got {stored.shape}"
                )
            p.value[...] = stored
    return model, tokenizer
