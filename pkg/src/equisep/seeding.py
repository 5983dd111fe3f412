"""Deterministic seed derivation.

Every random stream in the package is derived from a master seed and a
string label via ``split_seed``, so independent components (training
runs, separation probes, corpora) never share or race on generator
state.  The split is the first 8 bytes of SHA-256 over ``"{seed}:{label}"``.
"""

from __future__ import annotations

import hashlib

import numpy as np


def split_seed(seed: int, label: str) -> int:
    """Derive a child seed from (master seed, label)."""
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def child_rng(seed: int, label: str) -> np.random.Generator:
    """Generator seeded by split_seed(seed, label)."""
    return np.random.default_rng(split_seed(seed, label))
