"""Deterministic RNG derivation helpers.

Every stochastic component owns a child generator derived from integer key
tuples, so results are reproducible across processes and platforms.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stable_key(text: str) -> int:
    """Map a string to a stable 64-bit integer (process-independent)."""
    digest = hashlib.blake2s(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def child_rng(*entropy: int) -> np.random.Generator:
    """Derive an independent generator from a tuple of integer keys."""
    seq = np.random.SeedSequence([int(e) & 0xFFFFFFFFFFFFFFFF for e in entropy])
    return np.random.default_rng(seq)
