"""Shared text cleaning pipeline feeding both the sparse and the neural branch.

All operations are pure functions over immutable inputs. The order of the
pipeline is fixed: clean -> tokenize -> slang normalization -> stopword
removal. Slang runs before stopwords so that slang spellings of stopwords
are caught as well.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import IngestionError

RESOURCE_DIR = Path(__file__).parent / "resources"

_URL_RE = re.compile(r"(?:https?://|www\.)\S+")
_MENTION_RE = re.compile(r"@\w+")
_NON_ALNUM_RE = re.compile(r"[^a-z0-9]+")
# Retweet marker plus the anonymization placeholders used by the corpus,
# dropped as whole tokens only.
_DROP_TOKENS = frozenset({"rt", "user", "url"})

_DELIMITERS = (",", ";", "\t")


@dataclass(frozen=True)
class NormalizationResources:
    """Slang map, stopword set and abusive lexicon; members are lowercase."""

    slang_map: dict[str, str]
    stopwords: frozenset[str]
    abusive_lexicon: frozenset[str]


@dataclass(frozen=True)
class CleanDoc:
    """Ordered lowercase tokens of one tweet after the full pipeline."""

    tokens: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


def clean_text(raw: str) -> str:
    """Lowercase and strip URLs, mentions, placeholders and symbols.

    The output only ever contains characters from [a-z0-9 ], with single
    spaces and no leading/trailing whitespace.
    """
    text = raw.lower()
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    text = _NON_ALNUM_RE.sub(" ", text)
    return " ".join(tok for tok in text.split() if tok not in _DROP_TOKENS)


def tokenize(cleaned: str) -> list[str]:
    """Whitespace split; empty input gives an empty list."""
    return cleaned.split()


def normalize_slang(tokens: list[str], slang_map: dict[str, str]) -> list[str]:
    """Replace each token by its canonical form when mapped.

    Multi-word canonical forms are spliced in place so downstream bigrams
    stay available.
    """
    out: list[str] = []
    for tok in tokens:
        repl = slang_map.get(tok)
        if repl is None:
            out.append(tok)
        else:
            out.extend(repl.split())
    return out


def remove_stopwords(tokens: list[str], stopwords: frozenset[str]) -> list[str]:
    return [tok for tok in tokens if tok not in stopwords]


def preprocess(raw: str, resources: NormalizationResources) -> CleanDoc:
    """The single pipeline used by both branches."""
    tokens = tokenize(clean_text(raw))
    tokens = normalize_slang(tokens, resources.slang_map)
    tokens = remove_stopwords(tokens, resources.stopwords)
    return CleanDoc(tuple(tokens))


def abusive_count(doc: CleanDoc, lexicon: frozenset[str]) -> int:
    """Number of token positions whose token is in the lexicon (duplicates count)."""
    return sum(1 for tok in doc.tokens if tok in lexicon)


def _open_resource(path: Path):
    if not path.exists():
        raise IngestionError(f"resource file not found: {path}")
    return open(path, encoding="utf-8-sig", errors="replace", newline="")


def load_slang_map(path: str | Path) -> dict[str, str]:
    """Two-column delimited file (surface form, canonical form).

    The delimiter is detected among comma/semicolon/tab; '#' lines are
    comments. Keys and values are lowercased.
    """
    path = Path(path)
    mapping: dict[str, str] = {}
    with _open_resource(path) as fh:
        lines = fh.read().splitlines()
    content = [(no, ln) for no, ln in enumerate(lines, start=1)
               if ln.strip() and not ln.lstrip().startswith("#")]
    if not content:
        return mapping
    delimiter = max(_DELIMITERS, key=content[0][1].count)
    for no, ln in content:
        row = next(csv.reader([ln], delimiter=delimiter))
        if len(row) < 2 or not row[0].strip():
            raise IngestionError(f"{path.name} line {no}: expected two delimited columns")
        mapping[row[0].strip().lower()] = row[1].strip().lower()
    return mapping


def load_token_set(path: str | Path) -> frozenset[str]:
    """One token per line; '#' lines are comments; tokens are lowercased."""
    path = Path(path)
    tokens = set()
    with _open_resource(path) as fh:
        for ln in fh:
            ln = ln.strip()
            if ln and not ln.startswith("#"):
                tokens.add(ln.lower())
    return frozenset(tokens)


def load_resources(slang_path=None, stopwords_path=None, lexicon_path=None) -> NormalizationResources:
    """Load the three resources; any path left unset falls back to the
    bundled synthetic files (demo/test quality, clearly labelled as such)."""
    slang = load_slang_map(slang_path or RESOURCE_DIR / "synthetic_slang.csv")
    stopwords = load_token_set(stopwords_path or RESOURCE_DIR / "synthetic_stopwords.txt")
    lexicon = load_token_set(lexicon_path or RESOURCE_DIR / "synthetic_lexicon.txt")
    return NormalizationResources(slang_map=slang, stopwords=stopwords, abusive_lexicon=lexicon)
