"""Wirtinger-flow solvers for the nonconvex least-squares estimator.

The objective is f(z) = (1/2m) sum_k (|<phi_k, z>|^2 - y_k)^2 with Wirtinger
gradient (1/m) sum_k (|<phi_k, z>|^2 - y_k) (phi_k phi_k^*) z.
"""

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .core import eig_hermitian
from .errors import InvalidArgumentError, NumericFailure

INITS = ("spectral", "truncated_spectral", "prior_scaled")

DIVERGENCE_FACTOR = 1e3


@dataclass
class WfConfig:
    max_iters: int = 2500
    tol: float = 1e-9
    step_rule: str = "ramped"  # ramped | fixed
    step_size: float = 0.1  # used by the fixed rule, divided by ||z0||^2
    init: str = "spectral"
    prior_range: Tuple[float, float] = (0.8, 1.2)
    trunc_alpha: float = 3.0
    sparsity: Optional[int] = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be >= 1")
        if self.tol <= 0:
            raise InvalidArgumentError("tol must be > 0")
        if self.step_rule not in ("ramped", "fixed"):
            raise InvalidArgumentError(f"unknown step rule: {self.step_rule!r}")
        if self.init not in INITS:
            raise InvalidArgumentError(f"unknown init: {self.init!r}")


@dataclass
class SolveTrace:
    estimate: np.ndarray
    iterations: int
    objective_history: np.ndarray
    converged: bool
    warning: Optional[str] = None


def data_matrix(E, y, mask=None):
    """Y = (1/m) sum_k y_k phi_k phi_k^*, optionally over a subset of indices."""
    V = E.vectors
    w = np.asarray(y, dtype=np.float64)
    if mask is not None:
        w = np.where(mask, w, 0.0)
    return (V.T * w) @ V.conj() / E.m


def spectral_init(E, y):
    """sqrt(mean y) times the top eigenvector of the data matrix.

    All-zero y carries no direction information; returns the zero signal.
    """
    y = np.asarray(y, dtype=np.float64)
    if not np.any(y != 0.0):
        return np.zeros(E.n, dtype=np.complex128)
    Y = data_matrix(E, y)
    _, U = eig_hermitian(Y, check=False)
    scale = math.sqrt(max(float(np.mean(y)), 0.0))
    return scale * U[:, 0]


def truncated_spectral_init(E, y, alpha=3.0):
    """Spectral init summing only indices with y_k <= alpha^2 * mean(y).

    Falls back to the plain spectral init when no index survives.
    """
    y = np.asarray(y, dtype=np.float64)
    if not np.any(y != 0.0):
        return np.zeros(E.n, dtype=np.complex128)
    mask = y <= alpha * alpha * float(np.mean(y))
    if not np.any(mask):
        return spectral_init(E, y)
    Y = data_matrix(E, y, mask=mask)
    _, U = eig_hermitian(Y, check=False)
    scale = math.sqrt(max(float(np.mean(y)), 0.0))
    return scale * U[:, 0]


def prior_scaled_init(x, rng, prior_range=(0.8, 1.2)):
    """s * x with s drawn uniformly from prior_range."""
    lo, hi = prior_range
    s = float(rng.uniform(lo, hi))
    return s * np.asarray(x, dtype=np.complex128)


def hard_threshold(v, s):
    """Keep the s largest-magnitude entries, zero the rest.

    Deterministic tie-break: on equal magnitudes the lower index is kept.
    Idempotent by construction.
    """
    v = np.asarray(v)
    if not 1 <= s <= len(v):
        raise InvalidArgumentError(f"sparsity {s} out of range for length {len(v)}")
    keep = np.argsort(-np.abs(v), kind="stable")[:s]
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return out


def _default_init(E, y, cfg, z0=None):
    if z0 is not None:
        return np.asarray(z0, dtype=np.complex128).copy()
    if cfg.init == "spectral":
        return spectral_init(E, y)
    if cfg.init == "truncated_spectral":
        return truncated_spectral_init(E, y, alpha=cfg.trunc_alpha)
    raise InvalidArgumentError("prior_scaled init needs an explicit z0")


def _iterate(E, y, cfg, z0, threshold_s=None):
    y = np.asarray(y, dtype=np.float64)
    A = E.vectors.conj()  # (A z)_k = <phi_k, z>
    At = E.vectors.T
    m = E.m
    z = z0.copy()
    z0sq = float(np.linalg.norm(z0)) ** 2
    history = []

    if z0sq == 0.0:
        # No direction to move in; meaningful only for y = 0 where the zero
        # signal is the global optimum.
        w = A @ z
        obj = float(np.sum((np.abs(w) ** 2 - y) ** 2)) / (2 * m)
        return SolveTrace(
            estimate=z,
            iterations=0,
            objective_history=np.array([obj]),
            converged=bool(np.all(y == 0.0)),
            warning="zero initialization",
        )

    converged = False
    it = 0
    w = A @ z
    c = np.abs(w) ** 2 - y
    obj = float(c @ c) / (2 * m)
    history.append(obj)
    obj0 = obj
    for t in range(1, cfg.max_iters + 1):
        it = t
        grad = At @ (c * w) / m
        if cfg.step_rule == "ramped":
            mu = min(1.0 - math.exp(-t / 330.0), 0.2) / z0sq
        else:
            mu = cfg.step_size / z0sq
        # Backtracking: halve the step until the objective stops increasing.
        # The ramped rule assumes ||z0|| tracks the signal norm; at very low
        # photon counts it does not, and unguarded steps overshoot.
        for _ in range(60):
            z_new = z - mu * grad
            if threshold_s is not None:
                z_new = hard_threshold(z_new, threshold_s)
            w_new = A @ z_new
            c_new = np.abs(w_new) ** 2 - y
            obj_new = float(c_new @ c_new) / (2 * m)
            if obj_new <= obj + 1e-12:
                break
            mu *= 0.5
        delta = float(np.linalg.norm(z_new - z))
        z, w, c, obj = z_new, w_new, c_new, obj_new
        history.append(obj)
        if obj > DIVERGENCE_FACTOR * max(obj0, 1e-300):
            raise NumericFailure(
                f"objective diverged at iteration {t}",
                trace=SolveTrace(z, t, np.array(history), False),
                iterations=t,
            )
        if delta < cfg.tol * max(float(np.linalg.norm(z)), 1e-30):
            converged = True
            break

    return SolveTrace(
        estimate=z,
        iterations=it,
        objective_history=np.array(history),
        converged=converged,
    )


def wf_solve(E, y, cfg, z0=None):
    """Wirtinger flow from z0 (default: the configured initialization)."""
    z0 = _default_init(E, y, cfg, z0)
    return _iterate(E, y, cfg, z0)


def sparse_init(E, y, s):
    """Spectral init restricted to the s coordinates with largest marginal.

    The marginal of coordinate j is (1/m) sum_k y_k |phi_{k,j}|^2; the init
    is the spectral estimate of the restricted ensemble, embedded back.
    """
    y = np.asarray(y, dtype=np.float64)
    marg = (np.abs(E.vectors) ** 2).T @ y / E.m
    support = np.sort(np.argsort(-marg, kind="stable")[:s])
    sub = type(E)(
        vectors=E.vectors[:, support], family=E.family, K=E.K, mu=E.mu
    )
    z_sub = spectral_init(sub, y)
    z = np.zeros(E.n, dtype=np.complex128)
    z[support] = z_sub
    return z


def sparse_wf_solve(E, y, cfg, restarts=3):
    """Wirtinger flow with hard thresholding to cfg.sparsity after each step.

    The diagonal-marginal support estimate is noisy at moderate m, so the
    solve is attempted from several deterministic starts and the run with
    the smallest final objective wins: (1) the marginal-restricted spectral
    init, (2) the full spectral init hard-thresholded to s, and (3) a few
    thresholded random starts seeded from the data.
    """
    s = cfg.sparsity
    if s is None or not 1 <= s <= E.n:
        raise InvalidArgumentError(f"sparsity {s} out of range for n={E.n}")
    y = np.asarray(y, dtype=np.float64)

    starts = [sparse_init(E, y, s)]
    if s < E.n:
        starts.append(hard_threshold(spectral_init(E, y), s))
        digest = hashlib.blake2b(y.tobytes(), digest_size=8).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "big"))
        amp = math.sqrt(max(float(np.mean(y)), 1e-30))
        for _ in range(restarts):
            g = rng.standard_normal(E.n) + 1j * rng.standard_normal(E.n)
            starts.append(hard_threshold(amp * g / np.linalg.norm(g), s))

    best = None
    for z0 in starts:
        try:
            trace = _iterate(E, y, cfg, z0, threshold_s=s)
        except NumericFailure:
            continue
        if best is None or trace.objective_history[-1] < best.objective_history[-1]:
            best = trace
        if best.objective_history[-1] <= 1e-20 * max(float(np.mean(y ** 2)), 1e-30):
            break
    if best is None:
        raise NumericFailure("all sparse solve attempts diverged")
    return best
