"""Run configuration: defaults, key=value config files, CLI overrides.

Every hyperparameter of both branches appears here by name so a reported
run is reproducible from one file plus one seed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from .classic import EstimatorSpec
from .errors import ConfigError
from .neural import ModelConfig
from .seeding import derive_seed


@dataclass
class RunConfig:
    # data and workflow
    data: str | None = None
    task: str = "hs"  # target label column: "hs" or "abusive"
    seed: int = 13
    test_fraction: float = 0.2
    out: str = "runs/latest"
    # resource files (None -> bundled synthetic fallback)
    slang: str | None = None
    stopwords: str | None = None
    lexicon: str | None = None
    # dataset column names
    text_column: str = "Tweet"
    hs_column: str = "HS"
    abusive_column: str = "Abusive"
    # sparse branch
    max_terms: int = 5000
    ngram_min: int = 1
    ngram_max: int = 2
    folds: int = 5
    cv_refit_vocab: bool = False  # refit the vocabulary inside each CV fold
    bench_test_all: bool = True  # evaluate every refit family on the test split
    nb_alpha: float = 1.0
    svm_lambda: float = 1e-4
    svm_epochs: int = 20
    rf_trees: int = 200
    rf_depth: int = 32
    # neural branch (Table-style hyperparameters)
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
    val_fraction: float = 0.1
    max_vocab: int = 20000
    pooling: str = "max"

    def validate(self) -> None:
        if self.task not in ("hs", "abusive"):
            raise ConfigError(f"task must be 'hs' or 'abusive', got {self.task!r}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must be in (0, 1)")
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        if self.ngram_min < 1 or self.ngram_max < self.ngram_min:
            raise ConfigError("ngram range must satisfy 1 <= ngram_min <= ngram_max")
        for name in ("slang", "stopwords", "lexicon"):
            value = getattr(self, name)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{name} resource file not found: {value}")
        try:
            self.model_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def column_map(self) -> dict[str, str]:
        return {"text": self.text_column, "hs": self.hs_column, "abusive": self.abusive_column}

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            embedding_dim=self.embedding_dim,
            max_len=self.max_len,
            filters=self.filters,
            kernel=self.kernel,
            lstm_units=self.lstm_units,
            dropout=self.dropout,
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            seed=derive_seed(self.seed, "neural"),
            val_fraction=self.val_fraction,
            max_vocab=self.max_vocab,
            pooling=self.pooling,
        )

    def estimator_specs(self) -> list[EstimatorSpec]:
        return [
            EstimatorSpec("naive_bayes", {"alpha": self.nb_alpha},
                          seed=derive_seed(self.seed, "naive_bayes")),
            EstimatorSpec("linear_svm", {"lam": self.svm_lambda, "epochs": self.svm_epochs},
                          seed=derive_seed(self.seed, "linear_svm")),
            EstimatorSpec("random_forest", {"n_trees": self.rf_trees, "max_depth": self.rf_depth},
                          seed=derive_seed(self.seed, "random_forest")),
        ]

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    target = _FIELD_TYPES[key]
    raw = raw.strip()
    if raw.lower() in ("none", "null", ""):
        return None
    if target in ("int", int):
        return int(raw)
    if target in ("float", float):
        return float(raw)
    if target in ("bool", bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    return raw


def parse_config_file(path: str | Path) -> dict:
    """Read ``key = value`` lines; '#' starts a comment."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    for no, raw_line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path.name} line {no}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path.name} line {no}: unknown key {key!r}")
        values[key] = _coerce(key, value)
    return values


def build_config(config_path: str | None = None, overrides: dict | None = None,
                 set_pairs: list[str] | None = None) -> RunConfig:
    """Defaults, then config file, then --set pairs, then explicit flags."""
    values: dict = {}
    if config_path:
        values.update(parse_config_file(config_path))
    for pair in set_pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, raw = (part.strip() for part in pair.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"--set: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value
    config = RunConfig(**values)
    config.validate()
    return config
