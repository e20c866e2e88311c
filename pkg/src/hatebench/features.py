"""Sparse TF-IDF over unigrams/bigrams plus a trailing abusive-count slot.

Weights follow tf(t,d) * ln(N / (df(t)+1)) with the idf clamped at zero so
the multinomial Naive Bayes downstream never sees negative inputs; tf is
the raw occurrence count. The vocabulary keeps the ``max_terms`` highest-df
terms (ties broken lexicographically ascending).
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import IngestionError
from .textprep import CleanDoc, abusive_count


def ngrams(tokens, ngram_range: tuple[int, int]) -> list[str]:
    """Unigrams and joined higher-order n-grams in document order.

    Bigrams join with '_', which cannot collide because cleaned tokens are
    alphanumeric only.
    """
    lo, hi = ngram_range
    out: list[str] = []
    for n in range(lo, hi + 1):
        if n == 1:
            out.extend(tokens)
        else:
            out.extend("_".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
    return out


@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]  # term -> dense column id (lexicographic order)
    df: dict[str, int]  # document frequency of each retained term
    n_docs: int  # corpus size at fit time
    max_terms: int | None
    ngram_range: tuple[int, int] = (1, 2)

    @property
    def n_terms(self) -> int:
        return len(self.index)

    def idf(self, term: str) -> float:
        return max(0.0, math.log(self.n_docs / (self.df[term] + 1)))


@dataclass(frozen=True)
class FeatureVector:
    """TF-IDF block as (column, weight) pairs plus the abusive-count slot.

    Pairs cover every distinct in-vocabulary n-gram of the document (weights
    may be zero when the idf clamps); columns are strictly increasing. The
    abusive slot sits at index ``dim - 1``.
    """

    pairs: tuple[tuple[int, float], ...]
    abusive_slot: float
    dim: int


def fit_vocabulary(docs, max_terms: int | None = 5000,
                   ngram_range: tuple[int, int] = (1, 2)) -> Vocabulary:
    """Count document frequencies and keep the top-df terms."""
    docs = list(docs)
    if not docs:
        raise ValueError("cannot fit a vocabulary on an empty document list")
    df: Counter[str] = Counter()
    for doc in docs:
        df.update(set(ngrams(list(doc.tokens), ngram_range)))
    retained = sorted(df, key=lambda t: (-df[t], t))
    if max_terms is not None:
        retained = retained[:max_terms]
    index = {term: col for col, term in enumerate(sorted(retained))}
    return Vocabulary(
        index=index,
        df={term: df[term] for term in index},
        n_docs=len(docs),
        max_terms=max_terms,
        ngram_range=ngram_range,
    )


def tfidf_vector(doc: CleanDoc, vocab: Vocabulary) -> tuple[tuple[int, float], ...]:
    """TF-IDF pairs for one document; out-of-vocabulary terms are ignored."""
    counts = Counter(ngrams(list(doc.tokens), vocab.ngram_range))
    pairs = []
    for term, tf in counts.items():
        col = vocab.index.get(term)
        if col is not None:
            pairs.append((col, tf * vocab.idf(term)))
    pairs.sort()
    return tuple(pairs)


def assemble_features(doc: CleanDoc, vocab: Vocabulary, lexicon: frozenset[str]) -> FeatureVector:
    """TF-IDF block followed by the abusive count at the final index."""
    return FeatureVector(
        pairs=tfidf_vector(doc, vocab),
        abusive_slot=float(abusive_count(doc, lexicon)),
        dim=vocab.n_terms + 1,
    )


def transform_corpus(docs, vocab: Vocabulary, lexicon: frozenset[str]) -> sparse.csr_matrix:
    """Row-per-document CSR matrix; row order matches document order."""
    dim = vocab.n_terms + 1
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for doc in docs:
        fv = assemble_features(doc, vocab, lexicon)
        for col, weight in fv.pairs:
            indices.append(col)
            data.append(weight)
        if fv.abusive_slot != 0.0:
            indices.append(dim - 1)
            data.append(fv.abusive_slot)
        indptr.append(len(indices))
    return sparse.csr_matrix(
        (np.asarray(data, dtype=np.float64),
         np.asarray(indices, dtype=np.int64),
         np.asarray(indptr, dtype=np.int64)),
        shape=(len(indptr) - 1, dim),
    )


_HEADER_RE = re.compile(r"^# n_docs=(\d+) max_terms=(\d+|none) ngram_range=(\d+)-(\d+)$")


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    """Audit artifact: header with N and cap, then term<TAB>df in column order."""
    cap = "none" if vocab.max_terms is None else str(vocab.max_terms)
    lo, hi = vocab.ngram_range
    lines = [f"# n_docs={vocab.n_docs} max_terms={cap} ngram_range={lo}-{hi}"]
    for term in sorted(vocab.index, key=vocab.index.get):
        lines.append(f"{term}\t{vocab.df[term]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocabulary(path: str | Path) -> Vocabulary:
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"vocabulary file not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise IngestionError(f"vocabulary file is empty: {path}")
    match = _HEADER_RE.match(lines[0])
    if match is None:
        raise IngestionError(f"{path.name}: malformed vocabulary header {lines[0]!r}")
    n_docs = int(match.group(1))
    max_terms = None if match.group(2) == "none" else int(match.group(2))
    ngram_range = (int(match.group(3)), int(match.group(4)))
    index: dict[str, int] = {}
    df: dict[str, int] = {}
    for no, ln in enumerate(lines[1:], start=2):
        if not ln:
            continue
        try:
            term, count = ln.split("\t")
        except ValueError:
            raise IngestionError(f"{path.name} line {no}: expected term<TAB>df") from None
        index[term] = len(index)
        df[term] = int(count)
    return Vocabulary(index=index, df=df, n_docs=n_docs,
                      max_terms=max_terms, ngram_range=ngram_range)
