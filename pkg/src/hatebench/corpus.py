"""Corpus ingestion, exploratory statistics and reproducible stratified splits."""

from __future__ import annotations

import csv
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IngestionError

DEFAULT_COLUMNS = {"text": "Tweet", "hs": "HS", "abusive": "Abusive"}
_DELIMITERS = (",", ";", "\t")


@dataclass(frozen=True)
class LabeledTweet:
    text: str
    hs: int
    abusive: int


@dataclass(frozen=True)
class CorpusStats:
    total_rows: int
    hs_counts: tuple[int, int]  # (negatives, positives)
    abusive_counts: tuple[int, int]
    length_histogram: dict[int, int]  # raw whitespace word count -> frequency
    mean_length: float


@dataclass(frozen=True)
class DataSplit:
    train_indices: list[int]
    test_indices: list[int]
    seed: int
    test_fraction: float


def _parse_label(cell: str, column: str, line_no: int, filename: str) -> int:
    value = cell.strip()
    if value not in ("0", "1"):
        raise IngestionError(
            f"{filename} line {line_no}: {column} label {cell!r} is not binary"
        )
    return int(value)


def load_corpus(path: str | Path, column_map: dict[str, str] | None = None) -> list[LabeledTweet]:
    """Read the delimited annotation table into one record per data row.

    The delimiter is detected among comma/semicolon/tab from the header
    line. Text is decoded as UTF-8 with invalid sequences replaced. Rows
    with unparsable labels are hard errors so the corpus size stays
    auditable.
    """
    columns = dict(DEFAULT_COLUMNS)
    if column_map:
        columns.update(column_map)
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"dataset file not found: {path}")

    with open(path, encoding="utf-8-sig", errors="replace", newline="") as fh:
        first = fh.readline()
        if not first.strip():
            raise IngestionError(f"dataset file is empty: {path}")
        delimiter = max(_DELIMITERS, key=first.count)
        fh.seek(0)
        reader = csv.reader(fh, delimiter=delimiter)
        header = next(reader)
        positions = {}
        for key in ("text", "hs", "abusive"):
            name = columns[key]
            if name not in header:
                raise IngestionError(
                    f"column {name!r} not found in header of {path.name} "
                    f"(header: {', '.join(header)})"
                )
            positions[key] = header.index(name)

        needed = max(positions.values()) + 1
        records = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < needed:
                raise IngestionError(
                    f"{path.name} line {line_no}: expected at least {needed} columns, got {len(row)}"
                )
            records.append(
                LabeledTweet(
                    text=row[positions["text"]],
                    hs=_parse_label(row[positions["hs"]], columns["hs"], line_no, path.name),
                    abusive=_parse_label(row[positions["abusive"]], columns["abusive"], line_no, path.name),
                )
            )
    if not records:
        raise IngestionError(f"{path.name} contains a header but no data rows")
    return records


def corpus_stats(corpus: list[LabeledTweet]) -> CorpusStats:
    """Label counts, raw word-length histogram and mean length in words."""
    if not corpus:
        raise ValueError("corpus is empty")
    hist = Counter(len(tweet.text.split()) for tweet in corpus)
    total = len(corpus)
    hs_pos = sum(tweet.hs for tweet in corpus)
    ab_pos = sum(tweet.abusive for tweet in corpus)
    mean_length = sum(words * freq for words, freq in hist.items()) / total
    return CorpusStats(
        total_rows=total,
        hs_counts=(total - hs_pos, hs_pos),
        abusive_counts=(total - ab_pos, ab_pos),
        length_histogram=dict(sorted(hist.items())),
        mean_length=mean_length,
    )


def _round_half_up(x: float) -> int:
    return math.floor(x + 0.5)


def stratified_split(labels, test_fraction: float, seed: int) -> DataSplit:
    """Per-class sampling without replacement; deterministic for a fixed seed.

    ``labels`` is the binary target column the split is stratified on. Each
    class contributes round(count * fraction) test rows (clamped so both
    sides keep at least one member).
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    y = np.asarray(labels)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("labels must be a non-empty 1-D sequence")
    rng = np.random.default_rng(seed)
    test: list[int] = []
    for cls in np.unique(y):
        members = np.flatnonzero(y == cls)
        if members.size < 2:
            raise ValueError(
                f"class {cls} has {members.size} member(s); need at least 2 to split"
            )
        n_test = _round_half_up(members.size * test_fraction)
        n_test = min(max(n_test, 1), members.size - 1)
        order = rng.permutation(members.size)
        test.extend(int(i) for i in members[order[:n_test]])
    test_set = set(test)
    train = [i for i in range(y.size) if i not in test_set]
    return DataSplit(
        train_indices=train,
        test_indices=sorted(test),
        seed=seed,
        test_fraction=test_fraction,
    )


def write_eda_artifacts(stats: CorpusStats, out_dir: str | Path) -> None:
    """Emit stats.json, length_hist.csv and an overview SVG figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "total_rows": stats.total_rows,
        "hs_counts": list(stats.hs_counts),
        "abusive_counts": list(stats.abusive_counts),
        "mean_length": stats.mean_length,
        "length_histogram": {str(k): v for k, v in stats.length_histogram.items()},
    }
    (out_dir / "stats.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    with open(out_dir / "length_hist.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("words,count\n")
        for words, count in stats.length_histogram.items():
            fh.write(f"{words},{count}\n")

    from .figures import eda_figure  # deferred: pulls in matplotlib

    eda_figure(stats, out_dir / "eda.svg")
