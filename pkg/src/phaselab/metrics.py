"""Error metrics modulo global phase and their lifted counterparts."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class ErrorReport:
    """dist and its derived metrics for one estimate.

    When ||x||_2 = 0 there is no relative scale; relative_mse then holds the
    absolute squared error and `normalized` is False.
    """

    dist: float
    relative_mse: float
    mae: float
    lifted_frobenius: Optional[float] = None
    normalized: bool = True


def dist_modulo_phase(z, x):
    """min over phi of ||e^{i phi} z - x||_2, in closed form.

    The optimal phase aligns <z, x> with the positive real axis; the value
    equals sqrt(||z||^2 + ||x||^2 - 2 |<z, x>|), but is evaluated as the norm
    of the phase-aligned difference, which does not cancel catastrophically
    when z is close to x modulo phase.
    """
    z = np.asarray(z, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    if z.shape != x.shape:
        raise InvalidArgumentError(f"shape mismatch: {z.shape} vs {x.shape}")
    c = np.vdot(z, x)
    phase = c / np.abs(c) if np.abs(c) > 0.0 else 1.0
    return float(np.linalg.norm(phase * z - x))


def lifted_error(Z, x):
    """Frobenius norm of Z - x x^*."""
    Z = np.asarray(Z, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    if Z.shape != (len(x), len(x)):
        raise InvalidArgumentError(f"shape mismatch: {Z.shape} vs n={len(x)}")
    return float(np.linalg.norm(Z - np.outer(x, x.conj())))


def error_report(z, x, Z=None):
    """Bundle dist, relative MSE, MAE (and optionally the lifted error)."""
    d = dist_modulo_phase(z, x)
    xnorm = float(np.linalg.norm(x))
    if xnorm > 0.0:
        rel = d * d / (xnorm * xnorm)
        normalized = True
    else:
        rel = d * d
        normalized = False
    lf = lifted_error(Z, x) if Z is not None else None
    return ErrorReport(
        dist=d, relative_mse=rel, mae=d, lifted_frobenius=lf, normalized=normalized
    )


def check_dis1(z, x, tol=1e-9):
    """Lifted-vs-signal distance inequality.

    lhs = ||z z^* - x x^*||_F, rhs = 0.5 * max(dist * ||x||, dist^2).
    holds iff lhs >= rhs - tol.
    """
    z = np.asarray(z, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    lhs = float(np.linalg.norm(np.outer(z, z.conj()) - np.outer(x, x.conj())))
    d = dist_modulo_phase(z, x)
    rhs = 0.5 * max(d * float(np.linalg.norm(x)), d * d)
    return lhs, rhs, lhs >= rhs - tol
