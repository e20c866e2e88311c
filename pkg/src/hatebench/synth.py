"""Synthetic tweet-table generator for tests and demos.

Labels are determined by the content: HS = 1 iff the tweet contains any
token from the bundled synthetic lexicon, and abusive = 1 iff one of the
inserted lexicon tokens belongs to the designated marker subset. Negatives
carry no lexicon tokens at all, so both tasks are separable by
construction and any sound pipeline reaches high F1. The HS class ratio is
fixed at 42% positives (before optional label noise); output bytes are
identical for a fixed seed.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

# Contents of resources/synthetic_lexicon.txt; any of these sets HS=1,
# the marker subset additionally sets abusive=1.
LEXICON_TOKENS = ("bodoh", "tolol", "goblok", "bego", "idiot",
                  "sampah", "busuk", "kampungan", "dungu", "payah")
ABUSIVE_MARKERS = ("bodoh", "tolol", "goblok", "bego", "idiot", "sampah")

_NEUTRAL = (
    "orang", "kamu", "saya", "hari", "kerja", "makan", "jalan", "kota",
    "teman", "suka", "sekolah", "rumah", "main", "bola", "film", "musik",
    "buku", "cuaca", "panas", "hujan", "senang", "besok", "kemarin", "pagi",
    "malam", "baru", "lama", "cepat",
)
_SLANGY = ("gk", "km", "bgt", "yg", "aja", "org")
_STOPPY = ("yang", "dan", "di", "ini", "itu", "dengan")
_WORD_POOL = _NEUTRAL + _SLANGY + _STOPPY

_DECOR_PREFIX = ("RT USER:", "USER", "")
_DECOR_SUFFIX = ("!!", "?", "URL", "http://t.co/abc123", "")


def make_synthetic_corpus(n: int, seed: int, path: str | Path,
                          label_noise: float = 0.0) -> Path:
    """Write an ``n``-row annotation table in the ingestion format.

    ``label_noise`` flips the written HS label with the given probability
    while leaving the content untouched (disabled by default).
    """
    if n < 20:
        raise ValueError(f"need at least 20 rows, got {n}")
    if not 0.0 <= label_noise < 1.0:
        raise ValueError("label_noise must be in [0, 1)")
    rng = np.random.default_rng(seed)

    n_pos = round(0.42 * n)
    is_hs = np.zeros(n, dtype=bool)
    is_hs[:n_pos] = True
    rng.shuffle(is_hs)

    marker_set = set(ABUSIVE_MARKERS)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["Tweet", "HS", "Abusive"])
        for i in range(n):
            n_words = int(rng.integers(8, 19))
            words = [str(w) for w in rng.choice(_WORD_POOL, size=n_words)]
            abusive = False
            if is_hs[i]:
                for _ in range(int(rng.integers(2, 5))):
                    token = str(rng.choice(LEXICON_TOKENS))
                    abusive = abusive or token in marker_set
                    words.insert(int(rng.integers(0, len(words) + 1)), token)
            if rng.random() < 0.3:
                j = int(rng.integers(0, len(words)))
                words[j] = words[j].upper()
            prefix = str(rng.choice(_DECOR_PREFIX))
            suffix = str(rng.choice(_DECOR_SUFFIX))
            text = " ".join(filter(None, [prefix, " ".join(words), suffix]))

            hs_label = bool(is_hs[i])
            if label_noise > 0.0 and rng.random() < label_noise:
                hs_label = not hs_label
            writer.writerow([text, int(hs_label), int(abusive)])
    return path
