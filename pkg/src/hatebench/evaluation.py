"""Confusion counts, threshold metrics, rank-based AUC and report emission.

The positive class is label 1 throughout. Ratios with a zero denominator
are reported as 0 and flagged instead of raising, so degenerate folds do
not abort cross-validation.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np
from scipy.stats import rankdata


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None = None
    undefined: tuple[str, ...] = ()  # ratios whose denominator was zero


def confusion(y_true, y_pred) -> ConfusionMatrix:
    t = np.asarray(y_true)
    p = np.asarray(y_pred)
    if t.shape != p.shape or t.ndim != 1 or t.size == 0:
        raise ValueError("y_true and y_pred must be equal-length non-empty vectors")
    for name, arr in (("y_true", t), ("y_pred", p)):
        bad = (arr != 0) & (arr != 1)
        if bad.any():
            raise ValueError(f"{name} contains a non-binary entry at index {int(np.flatnonzero(bad)[0])}")
    return ConfusionMatrix(
        tp=int(((t == 1) & (p == 1)).sum()),
        tn=int(((t == 0) & (p == 0)).sum()),
        fp=int(((t == 0) & (p == 1)).sum()),
        fn=int(((t == 1) & (p == 0)).sum()),
    )


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy, precision, recall and F1 from the four counts."""
    total = cm.total
    if total == 0:
        raise ValueError("confusion matrix is empty")
    undefined: list[str] = []

    def ratio(num: float, den: float, name: str) -> float:
        if den == 0:
            undefined.append(name)
            return 0.0
        return num / den

    precision = ratio(cm.tp, cm.tp + cm.fp, "precision")
    recall = ratio(cm.tp, cm.tp + cm.fn, "recall")
    f1 = ratio(2.0 * precision * recall, precision + recall, "f1")
    return MetricsReport(
        accuracy=(cm.tp + cm.tn) / total,
        precision=precision,
        recall=recall,
        f1=f1,
        undefined=tuple(undefined),
    )


def auc(y_true, scores) -> float:
    """Probability that a random positive outranks a random negative.

    Computed from the Mann-Whitney U statistic with average ranks, so ties
    count one half.
    """
    y = np.asarray(y_true)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = rankdata(s)
    rank_sum_pos = float(ranks[y == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def classification_report(y_true, y_pred, scores=None) -> tuple[ConfusionMatrix, MetricsReport]:
    """Confusion plus metrics, with AUC attached when scores are available
    and both classes are present."""
    cm = confusion(y_true, y_pred)
    report = metrics(cm)
    if scores is not None and cm.tp + cm.fn > 0 and cm.tn + cm.fp > 0:
        report = replace(report, auc=auc(y_true, scores))
    return cm, report


def percent(x: float) -> float:
    """Display rounding: percent with one decimal, half away from zero."""
    return float(Decimal(x * 100).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def _metrics_payload(report: MetricsReport) -> dict:
    payload = asdict(report)
    payload["undefined"] = list(report.undefined)
    payload["percent"] = {
        "accuracy": percent(report.accuracy),
        "precision": percent(report.precision),
        "recall": percent(report.recall),
        "f1": percent(report.f1),
    }
    return payload


def emit_report(meta: dict, out_dir: str | Path, *,
                metrics_by_method: dict[str, MetricsReport],
                confusions: dict[str, ConfusionMatrix] | None = None,
                leaderboard_rows: list[dict] | None = None,
                curves: list[dict] | None = None,
                extras: dict | None = None) -> dict:
    """Write report.json, metrics.csv and the confusion/curve figures.

    report.json keeps full precision and is byte-identical across reruns on
    identical inputs; metrics.csv carries the percent display values.
    Returns the report dictionary.
    """
    if not metrics_by_method:
        raise ValueError("emit_report needs at least one metrics payload")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    report: dict = {
        "meta": meta,
        "metrics": {m: _metrics_payload(r) for m, r in metrics_by_method.items()},
    }
    if confusions:
        report["confusion"] = {task: asdict(cm) for task, cm in confusions.items()}
    if leaderboard_rows:
        report["leaderboard"] = leaderboard_rows
    if curves:
        report["curves"] = curves
    if extras:
        report.update(extras)

    (out_dir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    lines = ["method,accuracy,precision,recall,f1"]
    for method, rep in metrics_by_method.items():
        pct = report["metrics"][method]["percent"]
        lines.append(f"{method},{pct['accuracy']},{pct['precision']},{pct['recall']},{pct['f1']}")
    (out_dir / "metrics.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    from .figures import confusion_figure, curves_figure  # deferred: matplotlib

    if confusions:
        for task, cm in confusions.items():
            confusion_figure(cm, task, out_dir / f"confusion_{task}.svg")
    if curves:
        curves_figure(curves, out_dir / "curves.svg")
    return report
