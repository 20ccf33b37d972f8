"""Gradient-free optimizers behind one interface.

Two methods: simultaneous-perturbation stochastic approximation (SPSA)
with the standard decaying gain sequences, and a linear-approximation
trust-region method in the COBYLA family (simplex of m+1 points, linear
model of the objective, steps of length rho, radius shrinking from
rho_begin toward rho_end).

Both minimizers share the calling convention

    x_best, log = minimize(f, x0, config, on_iteration=...)

where the log holds one record per iteration and ``on_iteration`` (if
given) receives each record as it is produced.  Best-seen values compare
raw evaluations; noisy objectives are never re-averaged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class OptimizationError(RuntimeError):
    """Objective returned a non-finite value."""


@dataclass(frozen=True)
class SpsaConfig:
    """Gains a_k = a/(k+1+A)^alpha and c_k = c/(k+1)^gamma, k from 0.

    ``stability`` is the usual A constant; None means max_iters / 10.
    """

    max_iters: int = 100
    a: float = 0.2
    c: float = 0.1
    stability: float | None = None
    alpha: float = 0.602
    gamma: float = 0.101
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if self.a <= 0 or self.c <= 0:
            raise ValueError("gains a and c must be positive")

    @property
    def a_stability(self) -> float:
        return self.max_iters / 10.0 if self.stability is None else self.stability


@dataclass(frozen=True)
class CobylaConfig:
    max_iters: int = 150
    rho_begin: float = 1.0
    rho_end: float = 1e-3

    def __post_init__(self) -> None:
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not 0.0 < self.rho_end <= self.rho_begin:
            raise ValueError("need 0 < rho_end <= rho_begin")


@dataclass(frozen=True)
class OptIteration:
    """One optimizer iteration: the point evaluated and the loss seen there.

    ``grad_norm`` is the norm of the SPSA gradient estimate, NaN for
    methods that build no gradient.  ``extras`` carries method-specific
    values (SPSA stores the two perturbed evaluations f_plus / f_minus).
    """

    iteration: int
    x: np.ndarray
    loss: float
    grad_norm: float
    best_loss: float
    extras: dict = field(default_factory=dict)


def _check_finite(value: float, where: str) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise OptimizationError(f"objective returned {value} at {where}")
    return value


def spsa_gradient_estimate(f, x: np.ndarray, c_k: float, delta: np.ndarray) -> np.ndarray:
    """Two-sided simultaneous-perturbation estimate of grad f at x.

    g_hat = [(f(x + c_k delta) - f(x - c_k delta)) / (2 c_k)] * delta,
    with delta a +/-1 vector.  Costs exactly two evaluations.
    """
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if x.shape != delta.shape:
        raise ValueError("x and delta must have the same shape")
    if c_k <= 0:
        raise ValueError("c_k must be positive")
    f_plus = _check_finite(f(x + c_k * delta), "x + c_k*delta")
    f_minus = _check_finite(f(x - c_k * delta), "x - c_k*delta")
    return ((f_plus - f_minus) / (2.0 * c_k)) * delta


def spsa_minimize(
    f,
    x0: np.ndarray,
    config: SpsaConfig,
    on_iteration=None,
) -> tuple[np.ndarray, list[OptIteration]]:
    """SPSA descent; exactly 2 objective evaluations per iteration.

    The per-iteration loss is the mean of the two perturbed evaluations,
    a proxy for f at the current iterate; the best-seen iterate under
    that proxy is returned.
    """
    x = np.asarray(x0, dtype=float).copy()
    if x.ndim != 1 or x.size == 0:
        raise ValueError("x0 must be a non-empty 1-D vector")
    rng = np.random.default_rng(config.seed)
    big_a = config.a_stability
    log: list[OptIteration] = []
    best_x = x.copy()
    best_loss = np.inf
    for k in range(config.max_iters):
        a_k = config.a / (k + 1 + big_a) ** config.alpha
        c_k = config.c / (k + 1) ** config.gamma
        delta = rng.choice([-1.0, 1.0], size=x.size)
        f_plus = _check_finite(f(x + c_k * delta), f"iteration {k}, +")
        f_minus = _check_finite(f(x - c_k * delta), f"iteration {k}, -")
        grad = ((f_plus - f_minus) / (2.0 * c_k)) * delta
        loss = 0.5 * (f_plus + f_minus)
        if loss < best_loss:
            best_loss = loss
            best_x = x.copy()
        record = OptIteration(
            iteration=k,
            x=x.copy(),
            loss=loss,
            grad_norm=float(np.linalg.norm(grad)),
            best_loss=best_loss,
            extras={"f_plus": f_plus, "f_minus": f_minus},
        )
        log.append(record)
        if on_iteration is not None:
            on_iteration(record)
        x = x - a_k * grad
    return best_x, log


def cobyla_minimize(
    f,
    x0: np.ndarray,
    config: CobylaConfig,
    on_iteration=None,
) -> tuple[np.ndarray, list[OptIteration]]:
    """Linear-model trust-region minimization, one evaluation per iteration.

    A simplex of m+1 points supports a linear fit of f around the best
    vertex; each iteration steps distance rho along the model's descent
    direction.  Successful steps may expand rho (never past rho_begin),
    failed ones halve it; the run stops at rho_end or after max_iters
    evaluations (initial simplex construction is not counted).  When the
    simplex degenerates or outgrows the trust region, an iteration is
    spent on a geometry step that rebuilds it one vertex at a time around
    the best point, so a collapsed simplex is repaired, never fatal.
    """
    x0 = np.asarray(x0, dtype=float).copy()
    if x0.ndim != 1 or x0.size == 0:
        raise ValueError("x0 must be a non-empty 1-D vector")
    if config.max_iters == 0:
        return x0, []
    m = x0.size
    rho = config.rho_begin

    vertices = np.vstack([x0] + [x0 + rho * _unit(m, i) for i in range(m)])
    values = np.array([_check_finite(f(v), "initial simplex") for v in vertices])

    log: list[OptIteration] = []
    iters = 0

    def record_eval(x: np.ndarray, loss: float) -> None:
        nonlocal iters
        rec = OptIteration(
            iteration=iters,
            x=x.copy(),
            loss=loss,
            grad_norm=float("nan"),
            best_loss=float(values.min()),
            extras={"rho": rho},
        )
        log.append(rec)
        if on_iteration is not None:
            on_iteration(rec)
        iters += 1

    while iters < config.max_iters and rho > config.rho_end:
        b = int(np.argmin(values))
        edges = np.delete(vertices - vertices[b], b, axis=0)
        distances = np.linalg.norm(edges, axis=1)
        singulars = np.linalg.svd(edges, compute_uv=False)

        if singulars[-1] < 0.1 * rho or distances.max() > 3.0 * rho:
            # geometry step: move the farthest vertex next to the best one,
            # along the direction the simplex currently spans worst
            direction = np.linalg.svd(edges)[2][-1]
            candidate = vertices[b] + rho * direction
            f_new = _check_finite(f(candidate), f"iteration {iters} (geometry)")
            rows = [i for i in range(m + 1) if i != b]
            victim = rows[int(np.argmax(distances))]
            vertices[victim] = candidate
            values[victim] = f_new
            record_eval(candidate, f_new)
            continue

        rhs = np.delete(values, b) - values[b]
        grad, *_ = np.linalg.lstsq(edges, rhs, rcond=None)
        gnorm = float(np.linalg.norm(grad))
        if gnorm < 1e-14:
            rho *= 0.5
            continue

        candidate = vertices[b] - (rho / gnorm) * grad
        f_before = values[b]
        f_new = _check_finite(f(candidate), f"iteration {iters}")
        worst = int(np.argmax(values))
        if f_new < values[worst]:
            vertices[worst] = candidate
            values[worst] = f_new
        record_eval(candidate, f_new)
        if f_new < f_before:
            rho = min(rho * 1.5, config.rho_begin)
        else:
            rho *= 0.5

    b = int(np.argmin(values))
    return vertices[b].copy(), log


def _unit(m: int, i: int) -> np.ndarray:
    e = np.zeros(m)
    e[i] = 1.0
    return e
