"""Projected-gradient solvers over the PSD cone and the nuclear-norm ball.

psd_ls_solve minimizes ||A(Z) - y||_2^2 over PSD Z with A(Z)_k = phi_k^* Z phi_k,
replacing an interior-point SDP with a first-order method: gradient step of
length 1/L (L from power iterations on the normal operator) followed by
projection onto the cone.  blinddeconv_solve does the same over the nuclear
ball {||Z||_* <= tau} for bilinear measurements b_k^* Z a_k.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import eig_hermitian, hermitize
from .errors import InvalidArgumentError, NumericFailure
from .wirtinger import DIVERGENCE_FACTOR

_POWER_ITERS = 20


@dataclass
class PsdSolveConfig:
    max_iters: int = 1000
    tol: float = 1e-8
    step: str = "lipschitz_estimate"  # lipschitz_estimate | fixed
    step_size: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be >= 1")
        if self.tol <= 0:
            raise InvalidArgumentError("tol must be > 0")
        if self.step not in ("lipschitz_estimate", "fixed"):
            raise InvalidArgumentError(f"unknown step mode: {self.step!r}")


@dataclass
class NuclearBallConfig:
    radius: float
    max_iters: int = 2000
    tol: float = 1e-9

    def __post_init__(self):
        if self.radius < 0:
            raise InvalidArgumentError("radius must be >= 0")
        if self.max_iters < 1:
            raise InvalidArgumentError("max_iters must be >= 1")
        if self.tol <= 0:
            raise InvalidArgumentError("tol must be > 0")


@dataclass
class MatrixTrace:
    iterations: int
    objective_history: np.ndarray
    converged: bool
    warning: Optional[str] = None


def project_psd(A):
    """Frobenius-nearest PSD matrix: clamp negative eigenvalues to zero."""
    w, U = eig_hermitian(A, check=False)
    w = np.maximum(w, 0.0)
    return hermitize((U * w) @ U.conj().T)


def extract_rank1(Z):
    """sqrt(lambda_1) u_1 under the shared eigenvector phase convention."""
    w, U = eig_hermitian(Z, check=False)
    top = w[0]
    if top < -1e-9 * max(abs(w[0]), abs(w[-1]), 1e-30):
        raise InvalidArgumentError("top eigenvalue is negative; not a PSD output")
    return math.sqrt(max(top, 0.0)) * U[:, 0]


def project_simplex(v, tau):
    """Euclidean projection of v onto {w >= 0, sum w <= tau}, sort-and-threshold."""
    v = np.asarray(v, dtype=np.float64)
    w = np.maximum(v, 0.0)
    if w.sum() <= tau:
        return w
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - tau
    k = np.nonzero(u - css / np.arange(1, len(v) + 1) > 0)[0][-1]
    theta = css[k] / (k + 1.0)
    return np.maximum(v - theta, 0.0)


def project_nuclear_ball(Z, tau):
    """Project onto {||Z||_* <= tau} by simplex projection of the singular values."""
    if tau < 0:
        raise InvalidArgumentError("radius must be >= 0")
    Z = np.asarray(Z, dtype=np.complex128)
    U, s, Vh = np.linalg.svd(Z, full_matrices=False)
    if s.sum() <= tau:
        return Z
    s_proj = project_simplex(s, tau)
    return (U * s_proj) @ Vh


def _lifted_rows(E):
    """Row k = vec(phi_k phi_k^*)^conj so rows @ vec(Z) = phi_k^* Z phi_k."""
    V = E.vectors
    return (V.conj()[:, :, None] * V[:, None, :]).reshape(E.m, E.n * E.n)


def _bilinear_rows(B):
    """Row k such that rows @ vec(Z) = b_k^* Z a_k."""
    return (B.right.conj()[:, :, None] * B.left[:, None, :]).reshape(
        B.m, B.n * B.n
    )


def _lipschitz(rows, n, m):
    """Largest eigenvalue of Z -> adjoint(rows @ vec(Z)) / m by power iteration."""
    W = np.eye(n, dtype=np.complex128)
    W /= np.linalg.norm(W)
    lam = 1.0
    for _ in range(_POWER_ITERS):
        TW = (rows.conj().T @ (rows @ W.ravel())).reshape(n, n) / m
        TW = hermitize(TW)
        lam = float(np.linalg.norm(TW))
        if lam == 0.0:
            return 1.0
        W = TW / lam
    return lam


def psd_ls_solve(E, y, cfg):
    """Projected gradient for the PSD-constrained least squares.

    Starts from the PSD projection of the spectral data matrix; each step is
    Z <- P_psd(Z - (1/L) grad) with grad = adjoint(A(Z) - y)/m.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (E.m,):
        raise InvalidArgumentError(f"y length {y.shape} does not match m={E.m}")
    n, m = E.n, E.m
    rows = _lifted_rows(E)

    def apply_op(Z):
        return (rows @ Z.ravel()).real

    def adjoint(v):
        return hermitize((rows.conj().T @ v).reshape(n, n))

    if not np.any(y != 0.0):
        Z = np.zeros((n, n), dtype=np.complex128)
        return Z, MatrixTrace(0, np.array([0.0]), True, warning="zero data")

    if cfg.step == "lipschitz_estimate":
        L = _lipschitz(rows, n, m)
        eta = 1.0 / max(L, 1e-30)
    else:
        eta = cfg.step_size

    Z = project_psd(adjoint(y) / m)

    def objective(W):
        r = apply_op(W) - y
        return float(r @ r) / (2 * m), r

    return _projected_descent(
        Z, objective, lambda r: adjoint(r) / m, project_psd, eta, cfg
    )


def _projected_descent(Z, objective, gradient, project, eta, cfg):
    """Shared projected-gradient loop with step-halving backtracking."""
    history = []
    converged = False
    it = 0
    obj, r = objective(Z)
    history.append(obj)
    obj0 = obj
    for t in range(1, cfg.max_iters + 1):
        it = t
        grad = gradient(r)
        step = eta
        for _ in range(60):
            Z_new = project(Z - step * grad)
            obj_new, r_new = objective(Z_new)
            if obj_new <= obj + 1e-12:
                break
            step *= 0.5
        delta = float(np.linalg.norm(Z_new - Z))
        Z, obj, r = Z_new, obj_new, r_new
        history.append(obj)
        if obj > DIVERGENCE_FACTOR * max(obj0, 1e-300):
            raise NumericFailure(
                f"objective diverged at iteration {t}",
                trace=MatrixTrace(t, np.array(history), False),
                iterations=t,
            )
        if delta < cfg.tol * max(float(np.linalg.norm(Z)), 1e-30):
            converged = True
            break
    return Z, MatrixTrace(it, np.array(history), converged)


def blinddeconv_solve(B, y, cfg):
    """Projected gradient over the nuclear ball for bilinear measurements."""
    y = np.asarray(y, dtype=np.complex128)
    if y.shape != (B.m,):
        raise InvalidArgumentError(f"y length {y.shape} does not match m={B.m}")
    n, m = B.n, B.m
    rows = _bilinear_rows(B)

    def apply_op(Z):
        return rows @ Z.ravel()

    def adjoint(v):
        return (rows.conj().T @ v).reshape(n, n)

    if cfg.radius == 0.0:
        Z = np.zeros((n, n), dtype=np.complex128)
        return Z, MatrixTrace(0, np.array([float(np.vdot(y, y).real) / (2 * m)]), True)

    W = np.eye(n, dtype=np.complex128)
    W /= np.linalg.norm(W)
    L = 1.0
    for _ in range(_POWER_ITERS):
        TW = adjoint(apply_op(W)) / m
        L = float(np.linalg.norm(TW))
        if L == 0.0:
            L = 1.0
            break
        W = TW / L
    eta = 1.0 / max(L, 1e-30)

    Z = project_nuclear_ball(adjoint(y) / m, cfg.radius)

    def objective(W):
        r = apply_op(W) - y
        return float(np.vdot(r, r).real) / (2 * m), r

    return _projected_descent(
        Z,
        objective,
        lambda r: adjoint(r) / m,
        lambda W: project_nuclear_ball(W, cfg.radius),
        eta,
        cfg,
    )
