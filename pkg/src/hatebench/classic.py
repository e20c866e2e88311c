"""The three conventional estimators behind one contract.

Multinomial Naive Bayes consumes the TF-IDF values as soft counts (they are
non-negative by construction), the linear SVM is a Pegasos-style primal
stochastic subgradient solver, and the random forest grows Gini trees on
bootstrap samples (see forest.py). Training is deterministic for a fixed
spec seed; scores are HS-leaning reals (NB: log-posterior margin, SVM:
signed distance, RF: positive vote fraction).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from .forest import ForestModel, forest_votes, train_forest
from .seeding import derive_seed

FAMILIES = ("naive_bayes", "linear_svm", "random_forest")

_FAMILY_DEFAULTS: dict[str, dict] = {
    "naive_bayes": {"alpha": 1.0},
    "linear_svm": {"lam": 1e-4, "epochs": 20},
    "random_forest": {"n_trees": 200, "max_depth": 32, "mtry": None, "bootstrap": True},
}

DEFAULT_THRESHOLDS = {"naive_bayes": 0.0, "linear_svm": 0.0, "random_forest": 0.5}


@dataclass(frozen=True, eq=False)
class EstimatorSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown estimator family {self.family!r}")
        allowed = _FAMILY_DEFAULTS[self.family]
        for key, value in self.hyperparameters.items():
            if key not in allowed:
                raise ValueError(f"{self.family}: unknown hyperparameter {key!r}")
            if key in ("alpha", "lam") and not value > 0:
                raise ValueError(f"{self.family}: {key} must be positive")
            if key in ("epochs", "n_trees", "max_depth") and int(value) < 1:
                raise ValueError(f"{self.family}: {key} must be at least 1")
            if key == "mtry" and value is not None and int(value) < 1:
                raise ValueError(f"{self.family}: mtry must be at least 1 or None")

    def resolved(self) -> dict:
        return {**_FAMILY_DEFAULTS[self.family], **self.hyperparameters}


def default_specs(root_seed: int, overrides: dict[str, dict] | None = None) -> list[EstimatorSpec]:
    """The three retained families, each with its own derived seed."""
    overrides = overrides or {}
    return [
        EstimatorSpec(family, overrides.get(family, {}), seed=derive_seed(root_seed, family))
        for family in FAMILIES
    ]


@dataclass
class TrainedModel:
    family: str
    dim: int
    params: dict


def _validate_training_inputs(X, y) -> tuple[sparse.csr_matrix, np.ndarray]:
    X = sparse.csr_matrix(X)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] != y.size:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.size} labels")
    if X.shape[0] < 2:
        raise ValueError("need at least two training rows")
    if np.any((y != 0) & (y != 1)):
        raise ValueError("labels must be binary 0/1")
    if np.unique(y).size < 2:
        raise ValueError("training labels contain a single class")
    return X, y


def _train_nb(X, y, alpha: float) -> dict:
    if X.nnz and X.data.min() < 0:
        raise ValueError("multinomial Naive Bayes requires non-negative features")
    dim = X.shape[1]
    log_prior = np.empty(2)
    log_like = np.empty((2, dim))
    for cls in (0, 1):
        rows = np.flatnonzero(y == cls)
        log_prior[cls] = np.log(rows.size / y.size)
        # soft counts: alpha-smoothed column sums over the class rows
        sums = np.asarray(X[rows].sum(axis=0)).ravel()
        log_like[cls] = np.log((sums + alpha) / (sums.sum() + alpha * dim))
    return {"log_prior": log_prior, "log_like": log_like}


def _train_svm(X, y, lam: float, epochs: int, seed: int) -> dict:
    # The bias is treated as a regularized constant-feature coordinate (it
    # decays with the weights); an unregularized bias blows up under the
    # 1/(lam*t) step sizes of the early iterations.
    ypm = 2.0 * y - 1.0
    n, dim = X.shape
    indptr, indices, data = X.indptr, X.indices, X.data
    rng = np.random.default_rng(seed)
    v = np.zeros(dim)
    scale = 1.0
    b = 0.0
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            lo, hi = indptr[i], indptr[i + 1]
            idx = indices[lo:hi]
            val = data[lo:hi]
            margin = ypm[i] * (scale * (v[idx] @ val) + b)
            decay = 1.0 - eta * lam  # zero exactly at t == 1, where w is still 0
            if decay == 0.0:
                scale = 1.0
                v[:] = 0.0
                b = 0.0
            else:
                scale *= decay
                b *= decay
            if margin < 1.0:
                v[idx] += (eta * ypm[i] / scale) * val
                b += eta * ypm[i]
            if scale < 1e-9:
                v *= scale
                scale = 1.0
    return {"w": scale * v, "b": b}


def train(spec: EstimatorSpec, X, y) -> TrainedModel:
    """Fit one estimator; deterministic for a fixed spec seed."""
    X, y = _validate_training_inputs(X, y)
    hp = spec.resolved()
    if spec.family == "naive_bayes":
        params = _train_nb(X, y, hp["alpha"])
    elif spec.family == "linear_svm":
        params = _train_svm(X, y, hp["lam"], int(hp["epochs"]), spec.seed)
    else:
        forest = train_forest(
            X, y,
            n_trees=int(hp["n_trees"]), max_depth=int(hp["max_depth"]),
            mtry=hp["mtry"], seed=spec.seed, bootstrap=bool(hp["bootstrap"]),
        )
        params = {"forest": forest}
    return TrainedModel(family=spec.family, dim=X.shape[1], params=params)


def score(model: TrainedModel, X) -> np.ndarray:
    """Per-row decision score, higher meaning more HS-like."""
    X = sparse.csr_matrix(X)
    if X.shape[1] != model.dim:
        raise ValueError(f"feature dimension {X.shape[1]} does not match training dimension {model.dim}")
    if model.family == "naive_bayes":
        delta = model.params["log_like"][1] - model.params["log_like"][0]
        margin = model.params["log_prior"][1] - model.params["log_prior"][0]
        return np.asarray(X @ delta).ravel() + margin
    if model.family == "linear_svm":
        return np.asarray(X @ model.params["w"]).ravel() + model.params["b"]
    return forest_votes(model.params["forest"], X)


def predict(model: TrainedModel, X, threshold: float | None = None) -> np.ndarray:
    """Label 1 iff score > threshold (default 0 for NB/SVM, 0.5 for RF)."""
    if threshold is None:
        threshold = DEFAULT_THRESHOLDS[model.family]
    return (score(model, X) > threshold).astype(np.int64)


def save_model(model: TrainedModel, path: str | Path) -> None:
    """Self-describing npz artifact: family tag plus named parameter arrays."""
    arrays = {"family": np.array(model.family), "dim": np.array(model.dim)}
    if model.family == "random_forest":
        forest: ForestModel = model.params["forest"]
        arrays.update(
            n_trees=np.array(forest.n_trees), feat=forest.feat, thr=forest.thr,
            left=forest.left, right=forest.right, pos_w=forest.pos_w,
            neg_w=forest.neg_w, offsets=forest.offsets,
        )
    elif model.family == "linear_svm":
        arrays.update(w=model.params["w"], b=np.array(model.params["b"]))
    else:
        arrays.update(log_prior=model.params["log_prior"], log_like=model.params["log_like"])
    np.savez(path, **arrays)


def load_model(path: str | Path) -> TrainedModel:
    with np.load(path, allow_pickle=False) as bundle:
        family = str(bundle["family"])
        dim = int(bundle["dim"])
        if family == "random_forest":
            params = {"forest": ForestModel(
                n_trees=int(bundle["n_trees"]), dim=dim,
                feat=bundle["feat"], thr=bundle["thr"], left=bundle["left"],
                right=bundle["right"], pos_w=bundle["pos_w"], neg_w=bundle["neg_w"],
                offsets=bundle["offsets"],
            )}
        elif family == "linear_svm":
            params = {"w": bundle["w"], "b": float(bundle["b"])}
        elif family == "naive_bayes":
            params = {"log_prior": bundle["log_prior"], "log_like": bundle["log_like"]}
        else:
            raise ValueError(f"unknown model family {family!r} in {path}")
    return TrainedModel(family=family, dim=dim, params=params)
