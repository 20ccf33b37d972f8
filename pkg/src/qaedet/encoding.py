"""Classical preprocessing and amplitude encoding.

Feature vectors are z-scored against training statistics (population
standard deviation), L2-normalized, zero-padded to the next power of two
and loaded directly into statevector amplitudes.  A register of
``n_q = max(1, ceil(log2 d))`` qubits holds a d-dimensional sample.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qsim import StateVector


class DegenerateSampleError(ValueError):
    """Sample has no direction after scaling (all scaled entries zero)."""


@dataclass(frozen=True)
class RawSample:
    """One labelled feature vector; labels are +1 or -1."""

    features: np.ndarray
    label: int

    def __post_init__(self) -> None:
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        if feats.ndim != 1 or feats.size == 0:
            raise ValueError("features must be a non-empty 1-D vector")
        if not np.all(np.isfinite(feats)):
            raise ValueError("features must be finite")
        if self.label not in (-1, 1):
            raise ValueError(f"label must be +1 or -1, got {self.label}")
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "label", int(self.label))


@dataclass(frozen=True)
class StandardizationStats:
    """Per-feature mean and population standard deviation."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        mu = np.ascontiguousarray(self.mu, dtype=np.float64)
        sigma = np.ascontiguousarray(self.sigma, dtype=np.float64)
        if mu.ndim != 1 or mu.shape != sigma.shape:
            raise ValueError("mu and sigma must be 1-D vectors of equal length")
        if np.any(sigma < 0):
            raise ValueError("sigma must be non-negative")
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)


def num_qubits_for(dim: int) -> int:
    """Qubits needed for a dim-dimensional sample: max(1, ceil(log2 dim))."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    return max(1, (dim - 1).bit_length())


@dataclass(frozen=True)
class EncodedSample:
    """Unit-norm amplitude vector of length 2**n_q, zero beyond original_dim."""

    values: np.ndarray
    n_q: int
    original_dim: int

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        n_q = int(self.n_q)
        d = int(self.original_dim)
        if n_q != num_qubits_for(d):
            raise ValueError(f"n_q {n_q} inconsistent with original_dim {d}")
        if values.shape != (2**n_q,):
            raise ValueError(f"expected {2**n_q} values, got shape {values.shape}")
        if abs(np.linalg.norm(values) - 1.0) > 1e-12:
            raise ValueError("encoded values must have unit L2 norm")
        if np.any(values[d:] != 0.0):
            raise ValueError("padded entries must be exactly zero")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "n_q", n_q)
        object.__setattr__(self, "original_dim", d)


def fit_standardizer(samples: list[RawSample]) -> StandardizationStats:
    """Per-feature mean and population std over a training set."""
    if not samples:
        raise ValueError("cannot fit standardizer on an empty sample list")
    dims = {s.features.size for s in samples}
    if len(dims) != 1:
        raise ValueError(f"inconsistent feature dimensions {sorted(dims)}")
    mat = np.stack([s.features for s in samples])
    return StandardizationStats(mat.mean(axis=0), mat.std(axis=0))


def preprocess(sample: RawSample, stats: StandardizationStats) -> EncodedSample:
    """z-score, L2-normalize and zero-pad one sample.

    Features with zero training spread scale to 0.  A sample whose scaled
    vector vanishes entirely has no encodable direction and raises
    ``DegenerateSampleError``.
    """
    x = sample.features
    if x.size != stats.mu.size:
        raise ValueError(
            f"sample has {x.size} features, standardizer expects {stats.mu.size}"
        )
    spread = np.where(stats.sigma > 0.0, stats.sigma, 1.0)
    scaled = np.where(stats.sigma > 0.0, (x - stats.mu) / spread, 0.0)
    norm = float(np.linalg.norm(scaled))
    if norm == 0.0:
        raise DegenerateSampleError("scaled sample is the zero vector")
    normalized = scaled / norm
    d = x.size
    n_q = num_qubits_for(d)
    values = np.zeros(2**n_q, dtype=np.float64)
    values[:d] = normalized
    # renormalize once to absorb rounding from the division
    values /= np.linalg.norm(values)
    return EncodedSample(values, n_q, d)


def amplitude_encode(sample: EncodedSample) -> StateVector:
    """Load encoded values directly as statevector amplitudes."""
    norm = float(np.linalg.norm(sample.values))
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"norm {norm} deviates from 1 by more than 1e-8")
    return StateVector(sample.n_q, sample.values.astype(np.complex128))
