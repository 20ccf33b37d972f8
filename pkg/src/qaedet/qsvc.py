"""Kernel SVM: SMO dual solver, prediction, and weighted classification metrics.

The solver maximizes the usual soft-margin dual

    sum_i alpha_i - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij
    subject to  sum_i alpha_i y_i = 0,  0 <= alpha_i <= C

by repeatedly updating the first-order maximal-violating pair of
coordinates, stopping once the pairwise KKT violation drops below tol.
It only needs the Gram matrix, so it accepts any symmetric matrix (or an
object exposing one via an ``entries`` attribute).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

SUPPORT_THRESHOLD = 1e-8
_TINY_CURVATURE = 1e-12


@dataclass(frozen=True)
class SvmModel:
    """Solved dual: coefficients, offset, and the training labels they weight.

    ``degenerate`` flags the single-class fallback (all alpha zero, bias
    set to the lone label so prediction always answers the majority).
    """

    alpha: np.ndarray
    bias: float
    support_indices: tuple[int, ...]
    C: float
    training_labels: np.ndarray
    degenerate: bool = False

    def __post_init__(self) -> None:
        alpha = np.ascontiguousarray(self.alpha, dtype=np.float64)
        labels = np.ascontiguousarray(self.training_labels, dtype=np.float64)
        if alpha.ndim != 1 or alpha.shape != labels.shape:
            raise ValueError("alpha and training_labels must be equal-length vectors")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("training labels must be -1 or +1")
        if self.C <= 0:
            raise ValueError("C must be positive")
        if np.any(alpha < -1e-12) or np.any(alpha > self.C + 1e-12):
            raise ValueError("alpha outside the [0, C] box")
        if abs(float(alpha @ labels)) > 1e-8:
            raise ValueError("alpha violates the equality constraint")
        alpha.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "training_labels", labels)
        object.__setattr__(self, "support_indices", tuple(int(i) for i in self.support_indices))

    def to_json(self) -> str:
        return json.dumps(
            {
                "alpha": self.alpha.tolist(),
                "bias": self.bias,
                "support_indices": list(self.support_indices),
                "C": self.C,
                "training_labels": self.training_labels.tolist(),
                "degenerate": self.degenerate,
            },
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> SvmModel:
        doc = json.loads(text)
        return cls(
            alpha=np.asarray(doc["alpha"], dtype=float),
            bias=float(doc["bias"]),
            support_indices=tuple(doc["support_indices"]),
            C=float(doc["C"]),
            training_labels=np.asarray(doc["training_labels"], dtype=float),
            degenerate=bool(doc["degenerate"]),
        )


@dataclass(frozen=True)
class Metrics:
    """Accuracy plus class-support-weighted precision, recall, and F1."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    elapsed_seconds: float = 0.0

    def __post_init__(self) -> None:
        for name in ("accuracy", "precision", "recall", "f1"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.elapsed_seconds < 0:
            raise ValueError("elapsed_seconds must be >= 0")


def _as_matrix(K) -> np.ndarray:
    return np.asarray(getattr(K, "entries", K), dtype=float)


def solve_dual(K, y, C: float = 1.0, tol: float = 1e-3, max_iters: int = 100_000) -> SvmModel:
    """Solve the box-constrained dual by maximal-violating-pair updates.

    Iterates until the largest pairwise KKT violation is below ``tol`` (or
    the iteration cap is hit, returning the best iterate found so far; the
    cap is generous for the problem sizes this package targets).
    """
    mat = _as_matrix(K)
    labels = np.asarray(y, dtype=float).ravel()
    n = labels.size
    if mat.shape != (n, n):
        raise ValueError(f"kernel matrix shape {mat.shape} does not match {n} labels")
    if not np.allclose(mat, mat.T, atol=1e-8):
        raise ValueError("kernel matrix must be symmetric")
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if C <= 0:
        raise ValueError("C must be positive")

    if np.all(labels == labels[0]):
        return SvmModel(
            alpha=np.zeros(n),
            bias=float(labels[0]),
            support_indices=(),
            C=C,
            training_labels=labels,
            degenerate=True,
        )

    Q = (labels[:, None] * labels[None, :]) * mat
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a^T Q a - sum a at alpha = 0

    for _ in range(max_iters):
        v = -labels * grad
        in_up = ((labels > 0) & (alpha < C - 1e-12)) | ((labels < 0) & (alpha > 1e-12))
        in_low = ((labels < 0) & (alpha < C - 1e-12)) | ((labels > 0) & (alpha > 1e-12))
        if not in_up.any() or not in_low.any():
            break
        i = int(np.flatnonzero(in_up)[np.argmax(v[in_up])])
        j = int(np.flatnonzero(in_low)[np.argmin(v[in_low])])
        if v[i] - v[j] <= tol:
            break

        quad = Q[i, i] + Q[j, j] - 2.0 * labels[i] * labels[j] * Q[i, j]
        step = (v[i] - v[j]) / max(quad, _TINY_CURVATURE)

        # move along the constraint-preserving direction, clipped to the
        # box of both coordinates (y_i a_i + y_j a_j is conserved)
        conserved = labels[i] * alpha[i] + labels[j] * alpha[j]
        sign = labels[i] * labels[j]
        if sign > 0:
            low = max(0.0, labels[j] * conserved - C)
            high = min(C, labels[j] * conserved)
        else:
            low = max(0.0, -labels[j] * conserved)
            high = min(C, C - labels[j] * conserved)
        new_i = float(np.clip(alpha[i] + labels[i] * step, low, high))
        new_j = labels[j] * (conserved - labels[i] * new_i)
        delta_i, delta_j = new_i - alpha[i], new_j - alpha[j]
        if abs(delta_i) < 1e-16 and abs(delta_j) < 1e-16:
            break
        alpha[i], alpha[j] = new_i, new_j
        grad += Q[:, i] * delta_i + Q[:, j] * delta_j

    alpha = np.clip(alpha, 0.0, C)
    v = -labels * grad
    unbounded = (alpha > SUPPORT_THRESHOLD) & (alpha < C - SUPPORT_THRESHOLD)
    if unbounded.any():
        bias = float(v[unbounded].mean())
    else:
        in_up = ((labels > 0) & (alpha < C - 1e-12)) | ((labels < 0) & (alpha > 1e-12))
        in_low = ((labels < 0) & (alpha < C - 1e-12)) | ((labels > 0) & (alpha > 1e-12))
        hi = v[in_up].max() if in_up.any() else 0.0
        lo = v[in_low].min() if in_low.any() else 0.0
        bias = float((hi + lo) / 2.0)

    support = tuple(int(i) for i in np.flatnonzero(alpha > SUPPORT_THRESHOLD))
    return SvmModel(
        alpha=alpha,
        bias=bias,
        support_indices=support,
        C=C,
        training_labels=labels,
    )


def dual_objective(alpha, K, y) -> float:
    """Minimization form of the dual: 1/2 a^T (yy^T * K) a - sum a."""
    mat = _as_matrix(K)
    a = np.asarray(alpha, dtype=float)
    labels = np.asarray(y, dtype=float)
    Q = (labels[:, None] * labels[None, :]) * mat
    return float(0.5 * a @ Q @ a - a.sum())


def decision_function(model: SvmModel, K_cross) -> np.ndarray:
    """Signed margin for each row of a (test x train) kernel block."""
    block = _as_matrix(K_cross)
    if block.ndim != 2 or block.shape[1] != model.alpha.size:
        raise ValueError(
            f"cross-kernel block with {block.shape} does not match "
            f"{model.alpha.size} training samples"
        )
    return block @ (model.alpha * model.training_labels) + model.bias


def predict(model: SvmModel, K_cross) -> np.ndarray:
    """Class labels from the decision function; ties resolve to +1."""
    values = decision_function(model, K_cross)
    return np.where(values >= 0.0, 1.0, -1.0)


def compute_metrics(predicted, truth, elapsed_seconds: float = 0.0) -> Metrics:
    """Accuracy and support-weighted precision/recall/F1 over both classes."""
    pred = np.asarray(predicted, dtype=float).ravel()
    true = np.asarray(truth, dtype=float).ravel()
    if pred.size != true.size or pred.size == 0:
        raise ValueError("predicted and truth must be equal-length and non-empty")
    accuracy = float(np.mean(pred == true))
    precision = recall = f1 = 0.0
    for cls in (1.0, -1.0):
        support = float(np.sum(true == cls))
        if support == 0:
            continue
        tp = float(np.sum((pred == cls) & (true == cls)))
        fp = float(np.sum((pred == cls) & (true != cls)))
        fn = support - tp
        p = tp / (tp + fp) if tp + fp > 0 else 0.0
        r = tp / (tp + fn)
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        weight = support / true.size
        precision += weight * p
        recall += weight * r
        f1 += weight * f
    return Metrics(accuracy, precision, recall, f1, elapsed_seconds)
