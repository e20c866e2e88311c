"""Model-comparison harness: stratified k-fold CV, leaderboard, champion refit.

Ranks candidate estimators by the unweighted mean of per-fold F1 scores;
ties break by mean accuracy (descending), then family name (ascending), so
the ranking is invariant to the order specs are supplied in.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import classic
from .classic import EstimatorSpec, TrainedModel
from .errors import TrainingError
from .evaluation import MetricsReport, classification_report


@dataclass(frozen=True)
class FoldAssignment:
    n_folds: int
    fold_of: np.ndarray  # row index -> fold id in 0..n_folds-1
    seed: int


@dataclass(frozen=True)
class LeaderboardEntry:
    spec: EstimatorSpec
    per_fold: list[MetricsReport]
    mean_f1: float
    mean_accuracy: float


@dataclass(frozen=True)
class Leaderboard:
    entries: list[LeaderboardEntry]  # sorted, best first
    champion: int = 0

    @property
    def champion_entry(self) -> LeaderboardEntry:
        return self.entries[self.champion]


def kfold_stratified(y, n_folds: int, seed: int) -> FoldAssignment:
    """Within each class, shuffled indices are dealt round-robin to folds."""
    y = np.asarray(y)
    if n_folds < 2:
        raise ValueError(f"need at least 2 folds, got {n_folds}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y.size, dtype=np.int64)
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.size < n_folds:
            raise ValueError(
                f"class {cls} has {members.size} member(s), fewer than {n_folds} folds"
            )
        shuffled = members[rng.permutation(members.size)]
        fold_of[shuffled] = np.arange(members.size) % n_folds
    return FoldAssignment(n_folds=n_folds, fold_of=fold_of, seed=seed)


def cross_validate(spec: EstimatorSpec, X, y, folds: FoldAssignment, *,
                   fit=classic.train, predict=classic.predict, score=classic.score,
                   transform=None) -> list[MetricsReport]:
    """One metrics report per fold, in fold-id order.

    Features are fixed by default (fitted once upstream on the training
    partition). Pass ``transform(train_rows, eval_rows) -> (X_tr, X_ev)`` to
    refit features per fold instead.
    """
    y = np.asarray(y, dtype=np.int64)
    reports = []
    for k in range(folds.n_folds):
        train_rows = np.flatnonzero(folds.fold_of != k)
        eval_rows = np.flatnonzero(folds.fold_of == k)
        if transform is None:
            X_tr, X_ev = X[train_rows], X[eval_rows]
        else:
            X_tr, X_ev = transform(train_rows, eval_rows)
        try:
            model = fit(spec, X_tr, y[train_rows])
        except Exception as exc:
            raise TrainingError(f"fold {k}: {spec.family} training failed: {exc}") from exc
        scores = score(model, X_ev)
        preds = predict(model, X_ev)
        _, report = classification_report(y[eval_rows], preds, scores)
        reports.append(report)
    return reports


def compare_models(specs, X, y, folds: FoldAssignment, **cv_kwargs) -> Leaderboard:
    """Cross-validate every spec and rank by mean F1."""
    specs = list(specs)
    if not specs:
        raise ValueError("compare_models needs at least one estimator spec")
    entries = []
    for spec in specs:
        per_fold = cross_validate(spec, X, y, folds, **cv_kwargs)
        entries.append(LeaderboardEntry(
            spec=spec,
            per_fold=per_fold,
            mean_f1=float(np.mean([r.f1 for r in per_fold])),
            mean_accuracy=float(np.mean([r.accuracy for r in per_fold])),
        ))
    entries.sort(key=lambda e: (-e.mean_f1, -e.mean_accuracy, e.spec.family))
    return Leaderboard(entries=entries, champion=0)


def refit_champion(leaderboard: Leaderboard, X, y, *, fit=classic.train) -> TrainedModel:
    """Retrain the champion spec on the full training matrix."""
    if not leaderboard.entries:
        raise ValueError("leaderboard is empty")
    return fit(leaderboard.champion_entry.spec, X, np.asarray(y, dtype=np.int64))


def leaderboard_rows(leaderboard: Leaderboard) -> list[dict]:
    rows = []
    for rank, entry in enumerate(leaderboard.entries, start=1):
        rows.append({
            "rank": rank,
            "family": entry.spec.family,
            "mean_f1": entry.mean_f1,
            "mean_accuracy": entry.mean_accuracy,
            "fold_f1": [r.f1 for r in entry.per_fold],
            "fold_accuracy": [r.accuracy for r in entry.per_fold],
            "fold_auc": [r.auc for r in entry.per_fold],
        })
    return rows


def write_leaderboard(leaderboard: Leaderboard, out_dir: str | Path) -> None:
    """Emit leaderboard.csv and leaderboard.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = leaderboard_rows(leaderboard)
    (out_dir / "leaderboard.json").write_text(
        json.dumps(rows, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    n_folds = len(rows[0]["fold_f1"]) if rows else 0
    header = ["family"] + [f"f1_fold_{k}" for k in range(n_folds)] + ["mean_f1", "mean_accuracy", "rank"]
    lines = [",".join(header)]
    for row in rows:
        cells = [row["family"]]
        cells += [repr(v) for v in row["fold_f1"]]
        cells += [repr(row["mean_f1"]), repr(row["mean_accuracy"]), str(row["rank"])]
        lines.append(",".join(cells))
    (out_dir / "leaderboard.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
