"""Observation models: Poisson counts and additive heavy-tailed noise."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import draw_ensemble, phaseless_apply
from .errors import InvalidArgumentError

NOISE_KINDS = ("noiseless", "poisson", "student_t", "gaussian")


@dataclass(frozen=True)
class NoiseModel:
    """Noise descriptor.

    kind      one of noiseless | poisson | student_t | gaussian
    dof       Student-t degrees of freedom (must be > 2 for finite variance)
    scale     additive-noise scale; for gaussian this is the std deviation sigma
    """

    kind: str
    dof: Optional[float] = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise InvalidArgumentError(f"unknown noise kind: {self.kind!r}")
        if self.kind == "student_t":
            if self.dof is None or self.dof <= 2:
                raise InvalidArgumentError(
                    f"student_t needs dof > 2, got {self.dof}"
                )
        if self.scale < 0:
            raise InvalidArgumentError(f"noise scale must be >= 0, got {self.scale}")

    def l4_norm(self):
        """Analytic L4 norm of the additive noise, inf when the 4th moment diverges."""
        if self.kind == "gaussian":
            return self.scale * 3.0 ** 0.25
        if self.kind == "student_t":
            nu = self.dof
            if nu <= 4:
                return np.inf
            return self.scale * (3.0 * nu * nu / ((nu - 2.0) * (nu - 4.0))) ** 0.25
        if self.kind == "noiseless":
            return 0.0
        raise InvalidArgumentError("no closed-form L4 for this model")


@dataclass(frozen=True)
class Observation:
    y: np.ndarray
    model: NoiseModel
    seed: int


def apply_noise(rates, model, seed):
    """Corrupt a nonnegative rate vector under `model`.

    poisson:   y_k ~ Poisson(rate_k), independent.
    additive:  y_k = rate_k + xi_k with xi i.i.d.
    Deterministic for a fixed seed.  numpy's Generator.poisson already
    switches between inversion (small rates) and transformed rejection
    (large rates), covering the full rate range we sweep.
    """
    rates = np.asarray(rates, dtype=np.float64)
    rng = np.random.default_rng(seed)
    if model.kind == "noiseless":
        return rates.copy()
    if model.kind == "poisson":
        if np.any(rates < 0):
            raise InvalidArgumentError("poisson rates must be nonnegative")
        return rng.poisson(rates).astype(np.float64)
    if model.kind == "student_t":
        return rates + model.scale * rng.standard_t(model.dof, size=rates.shape)
    if model.kind == "gaussian":
        return rates + model.scale * rng.standard_normal(rates.shape)
    raise InvalidArgumentError(f"unknown noise kind: {model.kind!r}")


def observe(E, x, model, seed):
    """Generate y from the phaseless measurements of x under `model`."""
    y = apply_noise(phaseless_apply(E, x), model, seed)
    return Observation(y=y, model=model, seed=seed)


def poisson_residuals(x, family, n_samples, seed):
    """Sample xi = Poisson(|<phi, x>|^2) - |<phi, x>|^2 over fresh phi draws."""
    n = len(x)
    E = draw_ensemble(family, n, n_samples, seed)
    rates = phaseless_apply(E, np.asarray(x, dtype=np.complex128))
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x9E3779B9]))
    return rng.poisson(rates).astype(np.float64) - rates


def empirical_moment_norms(x, family, n_samples, seed):
    """Estimate (psi1, L4) norms of the Poisson residual xi.

    L4 is the plain fourth-moment estimate (mean |xi|^4)^(1/4).  The psi1
    (sub-exponential) norm has no finite-sample estimator, so we use the
    standard moment-growth proxy max_p ||xi||_{L_p} / p over p in {1,2,4,8}.
    """
    if n_samples < 10 ** 3:
        raise InvalidArgumentError(f"need n_samples >= 1000, got {n_samples}")
    x = np.asarray(x, dtype=np.complex128)
    if np.linalg.norm(x) == 0.0:
        return 0.0, 0.0
    xi = poisson_residuals(x, family, n_samples, seed)
    a = np.abs(xi)
    l4 = float(np.mean(a ** 4) ** 0.25)
    psi1 = max(float(np.mean(a ** p) ** (1.0 / p)) / p for p in (1, 2, 4, 8))
    return psi1, l4
