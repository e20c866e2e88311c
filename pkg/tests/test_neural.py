import numpy as np
import pytest

from hatebench import neural
from hatebench.errors import CheckpointError
from hatebench.numerics import bce_loss
from hatebench.textprep import CleanDoc

TINY = dict(embedding_dim=8, max_len=12, filters=6, kernel=3, lstm_units=4,
            batch_size=8, max_epochs=4, patience=2, seed=5)


def docs_of(*token_lists):
    return [CleanDoc(tuple(tokens)) for tokens in token_lists]


# ---------------------------------------------------------------- tokenizer

def test_tokenizer_frequency_then_lexicographic():
    tok = neural.fit_tokenizer(docs_of(["a", "b"], ["b"]))
    assert tok.token_to_id == {"b": 2, "a": 3}


def test_tokenizer_oov():
    tok = neural.fit_tokenizer(docs_of(["a"]))
    assert tok.encode_token("zzz") == neural.OOV_ID


def test_tokenizer_cap():
    tok = neural.fit_tokenizer(docs_of(["a", "b", "c"], ["b"]), max_vocab=3)
    assert tok.token_to_id == {"b": 2}
    assert tok.vocab_size == 3


def test_tokenizer_empty():
    with pytest.raises(ValueError):
        neural.fit_tokenizer([])


def test_tokenizer_unaffected_by_encoding_unseen_docs():
    tok = neural.fit_tokenizer(docs_of(["a", "b"]))
    before = dict(tok.token_to_id)
    neural.encode_pad(CleanDoc(("new", "tokens", "here")), tok, 5)
    assert tok.token_to_id == before


# ---------------------------------------------------------------- encode_pad

def test_encode_pad_short_doc():
    tok = neural.fit_tokenizer(docs_of(["a", "b", "c"]))
    seq = neural.encode_pad(CleanDoc(("a", "b", "c")), tok, 50)
    assert len(seq.ids) == 50
    assert seq.true_length == 3
    assert all(i == 0 for i in seq.ids[3:])
    assert all(i >= 2 for i in seq.ids[:3])


def test_encode_pad_truncates_to_max_len():
    tok = neural.fit_tokenizer(docs_of(["w"]))
    seq = neural.encode_pad(CleanDoc(("w",) * 60), tok, 50)
    assert len(seq.ids) == 50 and seq.true_length == 50


def test_encode_pad_empty_doc():
    tok = neural.fit_tokenizer(docs_of(["w"]))
    seq = neural.encode_pad(CleanDoc(()), tok, 10)
    assert seq.true_length == 0
    assert set(seq.ids) == {0}


# ---------------------------------------------------------------- model build

def test_build_shapes_follow_config():
    config = neural.ModelConfig(seed=1)  # full-scale defaults
    model = neural.build_model(config, 10_000)
    shapes = {p.name: p.value.shape for p in model.parameters()}
    assert shapes["embedding"] == (10_000, 100)
    assert shapes["conv_w"] == (3, 100, 64)
    assert shapes["lstm_fwd_W_i"] == (64, 50)
    assert shapes["lstm_fwd_U_g"] == (50, 50)
    assert shapes["out_w"] == (100,)


def test_build_seed_determinism():
    config = neural.ModelConfig(**TINY)
    a = neural.build_model(config, 30)
    b = neural.build_model(config, 30)
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert np.array_equal(pa.value, pb.value)


def test_build_accepts_zero_dropout():
    neural.build_model(neural.ModelConfig(**{**TINY, "dropout": 0.0}), 10)


def test_config_validation():
    with pytest.raises(ValueError):
        neural.ModelConfig(dropout=1.0)
    with pytest.raises(ValueError):
        neural.ModelConfig(val_fraction=0.0)
    with pytest.raises(ValueError):
        neural.ModelConfig(kernel=4)
    with pytest.raises(ValueError):
        neural.ModelConfig(pooling="mean")


# ---------------------------------------------------------------- prediction

def _random_batch(rng, vocab, rows, max_len, min_len=1):
    ids = rng.integers(2, vocab, size=(rows, max_len))
    for r in range(rows):
        ids[r, rng.integers(min_len, max_len + 1):] = 0
    return ids, (ids != 0).astype(float)


def test_predict_zero_head_gives_half():
    model = neural.build_model(neural.ModelConfig(**TINY), 30)
    model.head.w.value[...] = 0.0
    model.head.b.value[...] = 0.0
    ids, mask = _random_batch(np.random.default_rng(0), 30, 5, 12)
    assert np.allclose(neural.predict_proba(model, ids, mask), 0.5)


def test_predict_duplicated_rows_duplicate_outputs():
    model = neural.build_model(neural.ModelConfig(**TINY), 30)
    ids, mask = _random_batch(np.random.default_rng(1), 30, 3, 12)
    ids2 = np.vstack([ids, ids[0:1]])
    mask2 = np.vstack([mask, mask[0:1]])
    out = neural.predict_proba(model, ids2, mask2)
    assert out[-1] == out[0]


def test_predict_batch_order_equivariance():
    model = neural.build_model(neural.ModelConfig(**TINY), 30)
    ids, mask = _random_batch(np.random.default_rng(2), 30, 7, 12)
    perm = np.random.default_rng(3).permutation(7)
    direct = neural.predict_proba(model, ids, mask)
    permuted = neural.predict_proba(model, ids[perm], mask[perm])
    assert np.array_equal(permuted, direct[perm])


def test_predict_rejects_all_pad():
    model = neural.build_model(neural.ModelConfig(**TINY), 30)
    ids = np.zeros((1, 12), dtype=np.int64)
    with pytest.raises(ValueError, match="all-pad"):
        neural.predict_proba(model, ids, (ids != 0).astype(float))


def test_pad_extension_invariance_full_model():
    config = neural.ModelConfig(**TINY)
    model = neural.build_model(config, 40)
    rng = np.random.default_rng(4)
    ids, mask = _random_batch(rng, 40, 6, 12)
    wider = np.zeros((6, 20), dtype=np.int64)
    wider[:, :12] = ids
    wmask = (wider != 0).astype(float)
    base = neural.predict_proba(model, ids, mask)
    extended = neural.predict_proba(model, wider, wmask)
    assert np.max(np.abs(base - extended)) <= 1e-12


# ---------------------------------------------------------------- training loop

def _labeled_batch(seed, rows, vocab=30, max_len=12):
    rng = np.random.default_rng(seed)
    ids, mask = _random_batch(rng, vocab, rows, max_len, min_len=2)
    marker = ids[:, 0] % 2  # label = parity of first token id: learnable
    return ids, mask, marker.astype(np.int64)


def test_early_stopping_counts_non_improving_epochs():
    # lr=0 keeps validation loss constant: epoch 0 sets the best, every
    # later epoch is non-improving, so patience=1 stops after two of them
    config = neural.ModelConfig(**{**TINY, "max_epochs": 10, "patience": 1,
                                   "learning_rate": 1e-30, "dropout": 0.0})
    model = neural.build_model(config, 30)
    train = _labeled_batch(0, 12)
    val = _labeled_batch(1, 6)
    log = neural.train_model(model, train, val)
    assert len(log.epochs) == 3
    assert log.best_epoch == 0


def test_restore_best_semantics():
    config = neural.ModelConfig(**{**TINY, "max_epochs": 6, "patience": 5,
                                   "learning_rate": 0.05, "dropout": 0.0})
    model = neural.build_model(config, 30)
    train = _labeled_batch(2, 16)
    val = _labeled_batch(3, 8)
    log = neural.train_model(model, train, val)
    best = min(r.val_loss for r in log.epochs)
    assert log.epochs[log.best_epoch].val_loss == best
    # the restored parameters reproduce the recorded minimum exactly
    ids_va, mask_va, y_va = val
    val_hat = neural.predict_proba(model, ids_va, mask_va)
    loss, _ = bce_loss(val_hat, y_va.astype(float))
    assert loss == pytest.approx(best, abs=1e-12)


def test_log_length_bounded_by_max_epochs():
    config = neural.ModelConfig(**{**TINY, "max_epochs": 3, "patience": 99})
    model = neural.build_model(config, 30)
    log = neural.train_model(model, _labeled_batch(4, 10), _labeled_batch(5, 6))
    assert len(log.epochs) == 3


def test_training_determinism():
    def run():
        config = neural.ModelConfig(**{**TINY, "max_epochs": 3})
        model = neural.build_model(config, 30)
        log = neural.train_model(model, _labeled_batch(6, 14), _labeled_batch(7, 6))
        return log, [p.value.copy() for p in model.parameters()]

    log_a, params_a = run()
    log_b, params_b = run()
    assert log_a == log_b
    for a, b in zip(params_a, params_b):
        assert np.array_equal(a, b)


def test_train_rejects_all_pad_rows():
    config = neural.ModelConfig(**TINY)
    model = neural.build_model(config, 30)
    ids, mask, y = _labeled_batch(8, 8)
    ids[3, :] = 0
    mask[3, :] = 0.0
    with pytest.raises(ValueError, match="all-pad"):
        neural.train_model(model, (ids, mask, y), _labeled_batch(9, 4))


def test_quick_memorization():
    # small overfit sanity check; the full-scale capacity check lives in
    # the acceptance suite
    config = neural.ModelConfig(**{**TINY, "max_epochs": 60, "patience": 60,
                                   "learning_rate": 0.02, "dropout": 0.0})
    model = neural.build_model(config, 30)
    ids, mask, y = _labeled_batch(10, 12)
    log = neural.train_model(model, (ids, mask, y), (ids, mask, y))
    assert min(r.train_loss for r in log.epochs) < 0.2


# ---------------------------------------------------------------- curves + checkpoint

def test_curves_csv(tmp_path):
    log = neural.TrainingLog(
        epochs=[neural.EpochRecord(0, 0.6, 0.7, 0.5, 0.8),
                neural.EpochRecord(1, 0.4, None, 0.45, None)],
        best_epoch=1)
    neural.write_curves_csv(log, tmp_path / "curves.csv")
    lines = (tmp_path / "curves.csv").read_text().strip().splitlines()
    assert lines[0] == "epoch,train_loss,val_loss,train_auc,val_auc"
    assert len(lines) == 3
    assert lines[2].startswith("1,0.4,0.45,,")


def test_checkpoint_roundtrip(tmp_path):
    config = neural.ModelConfig(**TINY)
    tok = neural.fit_tokenizer(docs_of(["a", "b", "c"], ["b", "d"]))
    model = neural.build_model(config, tok.vocab_size)
    ids, mask = _random_batch(np.random.default_rng(5), tok.vocab_size, 4, 12)
    before = neural.predict_proba(model, ids, mask)
    neural.save_checkpoint(tmp_path / "ck.npz", model, tok)
    loaded, tok2 = neural.load_checkpoint(tmp_path / "ck.npz", config)
    assert tok2.token_to_id == tok.token_to_id
    assert np.array_equal(neural.predict_proba(loaded, ids, mask), before)


def test_checkpoint_architecture_mismatch(tmp_path):
    config = neural.ModelConfig(**TINY)
    tok = neural.fit_tokenizer(docs_of(["a"]))
    model = neural.build_model(config, tok.vocab_size)
    neural.save_checkpoint(tmp_path / "ck.npz", model, tok)
    other = neural.ModelConfig(**{**TINY, "lstm_units": 9})
    with pytest.raises(CheckpointError, match="lstm_units"):
        neural.load_checkpoint(tmp_path / "ck.npz", other)


def test_checkpoint_corrupted_vocab_names_embedding(tmp_path):
    config = neural.ModelConfig(**TINY)
    tok = neural.fit_tokenizer(docs_of(["a", "b", "c"]))
    model = neural.build_model(config, tok.vocab_size)
    neural.save_checkpoint(tmp_path / "ck.npz", model, tok)
    import numpy as np_mod
    with np_mod.load(tmp_path / "ck.npz", allow_pickle=False) as bundle:
        arrays = {k: bundle[k] for k in bundle.files}
    arrays["tokens"] = arrays["tokens"][:1]  # truncate the vocabulary
    np_mod.savez(tmp_path / "bad.npz", **arrays)
    with pytest.raises(CheckpointError, match="embedding"):
        neural.load_checkpoint(tmp_path / "bad.npz", config)


def test_checkpoint_missing_file():
    with pytest.raises(FileNotFoundError):
        neural.load_checkpoint("/nonexistent/ck.npz")
