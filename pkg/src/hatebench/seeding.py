"""Deterministic seed fan-out.

Every random component (split, folds, estimator seeds, weight init, batch
shuffling, dropout) derives its own seed from the single root seed via a
label, so each stage is reproducible in isolation and independent of the
others.
"""

import hashlib


def derive_seed(root: int, label: str) -> int:
    """Map a root seed and a component label to a stable 63-bit seed."""
    digest = hashlib.sha256(f"{root}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1
