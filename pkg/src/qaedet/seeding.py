"""Deterministic seed derivation.

Every stochastic phase draws its randomness from a generator seeded by a
value derived from one global seed plus a context tag (phase name, sample
index, trajectory index, ...).  Derivation is a hash, so independent
contexts get statistically independent streams while the whole run stays
reproducible from the single global seed.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(base: int, *parts: int | str) -> int:
    """Derive a child seed from ``base`` and a context tag.

    Parts may be strings (phase names) or integers (indices).  The result
    is a non-negative 63-bit integer suitable for ``np.random.default_rng``.
    """
    h = hashlib.sha256()
    h.update(str(int(base)).encode())
    for p in parts:
        h.update(b"/")
        h.update(str(p).encode())
    return int.from_bytes(h.digest()[:8], "little") & (2**63 - 1)


def rng_for(base: int, *parts: int | str) -> np.random.Generator:
    """Generator seeded by :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(base, *parts))
