"""Executable property oracles for the structural results behind the estimators.

Covers: the lifted-vs-signal distance inequalities, the negative-eigenvalue
count on the convex admissible set, nuclear/Frobenius low-rank bounds with
the eigenvalue-based partition, empirical sampling-lower-bound (SLBC) and
noise-upper-bound (NUBC) constants, KL-divergence bounds for Poisson and
Gaussian likelihoods, and the separation geometry of hypothesis packs.
"""

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .convex import project_psd, extract_rank1
from .core import draw_ensemble, hermitize, lifted_apply, phaseless_apply
from .errors import InvalidArgumentError
from .metrics import check_dis1, dist_modulo_phase
from .noise import NoiseModel, empirical_moment_norms, observe

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


# ---------------------------------------------------------------------------
# admissible samples


def sample_ncvx_difference(n, rng, scale=1.0):
    """M = z z^* - x x^* with random z, x (rank <= 2)."""
    z = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    x = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return np.outer(z, z.conj()) - np.outer(x, x.conj())


def sample_cvx_difference(n, rng, scale=1.0):
    """M = Z - x x^* with random PSD Z.

    ||x|| is drawn over a range so both branches of the eigenvalue
    partition are exercised (a large x drives M toward -x x^*).
    """
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Z = project_psd(hermitize(A) * scale)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x *= scale * rng.uniform(0.2, 2.0) / np.linalg.norm(x) * n ** 0.5
    return Z - np.outer(x, x.conj())


def check_negative_eigs(M, tol=1e-9):
    """Count eigenvalues below -tol * ||M||_op; the convex admissible set
    allows at most one."""
    w = np.linalg.eigvalsh(hermitize(M))
    op = float(np.max(np.abs(w))) if len(w) else 0.0
    count = int(np.sum(w < -tol * max(op, 1e-30)))
    return count, count <= 1


def classify_cvx(M):
    """Partition of the convex admissible set by the eigenvalue test.

    Returns 2 when -lambda_min(M) > 0.5 * sum of the remaining eigenvalues
    (the nearly negative-definite branch), else 1.
    """
    w = np.sort(np.linalg.eigvalsh(hermitize(M)))
    return 2 if -w[0] > 0.5 * float(np.sum(w[1:])) else 1


def check_lowrank_bounds(M, origin, tol=1e-9):
    """Nuclear-vs-Frobenius bound for an admissible difference matrix.

    origin "ncvx": ||M||_* <= sqrt(2) ||M||_F.
    origin "cvx": branch 1 of the partition satisfies ||M||_* <= 3 ||M||_F;
    branch 2 carries no nuclear/Frobenius bound (it is handled by the
    nuclear-norm sampling floor instead) and passes vacuously.
    """
    w = np.linalg.eigvalsh(hermitize(M))
    nuc = float(np.sum(np.abs(w)))
    fro = float(np.sqrt(np.sum(w * w)))
    if origin == "ncvx":
        return nuc <= SQRT2 * fro + tol
    if origin == "cvx":
        if classify_cvx(M) == 1:
            return nuc <= 3.0 * fro + tol
        return True
    raise InvalidArgumentError(f"unknown origin: {origin!r}")


# ---------------------------------------------------------------------------
# empirical SLBC / NUBC


def empirical_slbc(E, n_probes, seed):
    """min over random unit-Frobenius rank-<=2 probes of (1/m) sum |<phi phi^*, M>|^2."""
    if n_probes < 100:
        raise InvalidArgumentError("need at least 100 probes")
    rng = np.random.default_rng(seed)
    best = np.inf
    for _ in range(n_probes):
        M = sample_ncvx_difference(E.n, rng)
        M /= np.linalg.norm(M)
        vals = lifted_apply(E, M)
        best = min(best, float(np.mean(vals ** 2)))
    return best


def empirical_slbc_nuclear(E, n_probes, seed):
    """min over branch-2 convex probes of (1/m) sum |<phi phi^*, M>|^2 / ||M||_*^2.

    Returns (minimum, number of probes that landed in branch 2).
    """
    if n_probes < 100:
        raise InvalidArgumentError("need at least 100 probes")
    rng = np.random.default_rng(seed)
    best = np.inf
    hits = 0
    for _ in range(n_probes):
        M = sample_cvx_difference(E.n, rng)
        if classify_cvx(M) != 2:
            continue
        hits += 1
        nuc = float(np.sum(np.abs(np.linalg.eigvalsh(M))))
        vals = lifted_apply(E, M)
        best = min(best, float(np.mean(vals ** 2)) / (nuc * nuc))
    return best, hits


def empirical_nubc_ratio(E, x, model, n_trials, seed):
    """median over trials of ||sum xi_k phi_k phi_k^*||_op / (norm_est * sqrt(m n)).

    norm_est is the psi1 proxy for Poisson residuals (estimated by Monte
    Carlo) and the analytic L4 norm for additive models.  The Poisson
    residual has conditional mean zero, so no centering term is needed.
    """
    x = np.asarray(x, dtype=np.complex128)
    if model.kind == "noiseless":
        return 0.0
    if model.kind == "poisson":
        est, _ = empirical_moment_norms(x, E.family, 10 ** 4, seed ^ 0x5DEECE66D)
    elif model.kind in ("student_t", "gaussian"):
        est = model.l4_norm()
        if not np.isfinite(est):
            raise InvalidArgumentError(
                "additive model needs a finite 4th moment (student_t dof > 4)"
            )
    else:
        raise InvalidArgumentError("model must be poisson or additive")
    if est == 0.0:
        return 0.0
    rates = phaseless_apply(E, x)
    ratios = []
    rng = np.random.default_rng(seed)
    V = E.vectors
    for _ in range(n_trials):
        obs = observe(E, x, model, int(rng.integers(2 ** 63)))
        xi = obs.y - rates
        S = (V.T * xi) @ V.conj()
        op = float(np.linalg.norm(S, 2))
        ratios.append(op / (est * math.sqrt(E.m * E.n)))
    return float(np.median(ratios))


# ---------------------------------------------------------------------------
# hypothesis packing


@dataclass(frozen=True)
class HypothesisPack:
    center: np.ndarray
    members: List[np.ndarray]
    delta: float


def pack_hypotheses(x, count_cap, seed):
    """Perturbed copies z = x + g / sqrt(2n) with real standard normal g.

    Pack size is min(exp(n/20), count_cap).  Requires a real-valued center
    and n >= 8 (the separation bounds are vacuous below that).
    """
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n < 8:
        raise InvalidArgumentError(f"packing needs n >= 8, got {n}")
    if not 1 <= count_cap <= 10 ** 4:
        raise InvalidArgumentError("count_cap must be in [1, 10^4]")
    if count_cap == 1:
        count = 1
    elif n / 20.0 >= math.log(count_cap):
        count = count_cap
    else:
        count = max(min(int(math.exp(n / 20.0)), count_cap), 1)
    rng = np.random.default_rng(seed)
    members = [x + rng.standard_normal(n) / math.sqrt(2.0 * n) for _ in range(count)]
    return HypothesisPack(center=x, members=members, delta=1.0)


def separation_bounds(n):
    """(lower, upper) pairwise-distance bounds for an unscaled pack."""
    return 1.0 / math.sqrt(8.0) - (2.0 * n) ** -0.5, 1.5 + n ** -0.5


def separation_fraction(pack):
    """Fraction of member pairs whose distance lies within the bounds."""
    n = len(pack.center)
    lo, hi = separation_bounds(n)
    lo, hi = pack.delta * lo, pack.delta * hi
    Z = np.array(pack.members)
    sq = np.sum(Z * Z, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * Z @ Z.T
    iu = np.triu_indices(len(Z), k=1)
    d = np.sqrt(np.maximum(d2[iu], 0.0))
    if len(d) == 0:
        return 1.0
    return float(np.mean((d >= lo) & (d <= hi)))


def rescale_pack(pack, delta):
    """Exact affine rescaling z <- x + delta (z - x) of every member."""
    if delta <= 0:
        raise InvalidArgumentError("delta must be > 0")
    x = pack.center
    members = [x + delta * (z - x) for z in pack.members]
    return HypothesisPack(center=x, members=members, delta=pack.delta * delta)


# ---------------------------------------------------------------------------
# KL bounds


def kl_bounds(E, z, x, model, tol=1e-9):
    """Exact KL divergence between likelihoods at z and x, and its bound.

    Poisson:  KL = sum lam0 - lam1 + lam1 log(lam1/lam0),
              bound = sum |<phi, z-x>|^2 (8 + 2 |<phi, z-x>|^2 / |<phi, x>|^2).
    Gaussian: KL = sum (lam1 - lam0)^2 / (2 sigma^2),
              bound = sum |<phi, z-x>|^2 (4 |<phi, x>|^2 + |<phi, z-x>|^2) / sigma^2.
    Here lam = |<phi, .>|^2 and z, x must be real-valued.
    """
    z = np.asarray(z)
    x = np.asarray(x)
    for v in (z, x):
        if np.iscomplexobj(v) and np.any(v.imag != 0):
            raise InvalidArgumentError("kl_bounds requires real-valued z and x")
    z = z.real.astype(np.float64)
    x = x.real.astype(np.float64)
    lam1 = phaseless_apply(E, z.astype(np.complex128))
    lam0 = phaseless_apply(E, x.astype(np.complex128))
    diff = np.abs(E.vectors.conj() @ (z - x).astype(np.complex128)) ** 2

    if model.kind == "poisson":
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = lam0 - lam1 + lam1 * np.log(np.where(lam1 > 0, lam1, 1.0) / lam0)
            terms = np.where(lam1 == 0.0, lam0, terms)
            exact = float(np.sum(terms))
            bterms = diff * (8.0 + 2.0 * np.where(lam0 > 0, diff / lam0, np.inf))
            bterms = np.where(diff == 0.0, 0.0, bterms)
            bound = float(np.sum(bterms))
    elif model.kind == "gaussian":
        sig2 = model.scale ** 2
        if sig2 == 0.0:
            raise InvalidArgumentError("gaussian KL needs sigma > 0")
        exact = float(np.sum((lam1 - lam0) ** 2) / (2.0 * sig2))
        bound = float(np.sum(diff * (4.0 * lam0 + diff)) / sig2)
    else:
        raise InvalidArgumentError("model must be poisson or gaussian")

    if not np.isfinite(exact):
        holds = not np.isfinite(bound)
    else:
        holds = exact <= bound + tol
    return exact, bound, holds


# ---------------------------------------------------------------------------
# suites


def _suite_propositions(seed):
    rng = np.random.default_rng(seed)
    results = []

    ok = True
    for n in (2, 8, 32):
        for _ in range(334):
            z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            _, _, h = check_dis1(z, x)
            ok &= h
    results.append(CheckResult("dis1 lifted-distance lower bound", ok, "10^3 random pairs"))

    ok = True
    worst = 0.0
    for _ in range(1000):
        n = 8
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x *= rng.uniform(0.5, 2.0) / np.linalg.norm(x)
        eta = rng.uniform(1e-3, 0.1)
        P = hermitize(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        P *= eta * np.linalg.norm(x) ** 2 / np.linalg.norm(P)
        Z = np.outer(x, x.conj()) + P
        zhat = extract_rank1(Z)
        d = dist_modulo_phase(zhat, x)
        lim = (1.0 + 2.0 * SQRT2) * eta * float(np.linalg.norm(x))
        worst = max(worst, d / lim if lim > 0 else 0.0)
        ok &= d <= lim + 1e-9
    results.append(
        CheckResult(
            "dis2 rank-1 extraction stability", ok, f"worst ratio {worst:.3f} of 1"
        )
    )

    ok = True
    worst_count = 0
    for _ in range(1000):
        M = sample_cvx_difference(8, rng)
        c, h = check_negative_eigs(M)
        worst_count = max(worst_count, c)
        ok &= h
    results.append(
        CheckResult(
            "at most one negative eigenvalue on convex differences",
            ok,
            f"max count {worst_count}",
        )
    )

    ok = True
    both = {1: 0, 2: 0}
    for _ in range(1000):
        M = sample_ncvx_difference(8, rng)
        ok &= check_lowrank_bounds(M, "ncvx")
        M = sample_cvx_difference(8, rng)
        both[classify_cvx(M)] += 1
        ok &= check_lowrank_bounds(M, "cvx")
    results.append(
        CheckResult(
            "low-rank nuclear/Frobenius bounds",
            ok,
            f"cvx partition counts {both[1]}/{both[2]}",
        )
    )
    results.append(
        CheckResult(
            "cvx partition exhaustive", both[1] + both[2] == 1000, "every sample classified"
        )
    )
    return results


def _suite_slbc(seed):
    results = []
    n = 16
    E = draw_ensemble("complex_gaussian", n, 20 * n, seed)
    alpha = empirical_slbc(E, 1000, seed + 1)
    results.append(
        CheckResult("SLBC rank-2 floor at m = 20n", alpha >= 0.1, f"alpha_hat {alpha:.4f}")
    )
    floor, hits = empirical_slbc_nuclear(E, 1000, seed + 2)
    target = 1.0 / 36.0 - 0.01
    results.append(
        CheckResult(
            "SLBC nuclear floor on branch-2 probes",
            floor >= target and hits > 0,
            f"min {floor:.4f} over {hits} probes (target {target:.4f})",
        )
    )
    medians = []
    for i, r in enumerate((5, 10, 20)):
        vals = [
            empirical_slbc(
                draw_ensemble("complex_gaussian", n, r * n, seed + 100 * i + t),
                100,
                seed + 7 * t,
            )
            for t in range(20)
        ]
        medians.append(float(np.median(vals)))
    mono = medians[0] <= medians[1] * 1.1 and medians[1] <= medians[2] * 1.1
    results.append(
        CheckResult(
            "SLBC floor nondecreasing in m/n",
            mono,
            "medians " + ", ".join(f"{v:.4f}" for v in medians),
        )
    )
    return results


def _suite_nubc(seed):
    results = []
    n = 16
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    E = draw_ensemble("complex_gaussian", n, 20 * n, seed + 1)
    ratio = empirical_nubc_ratio(E, x, NoiseModel("poisson"), 50, seed + 2)
    results.append(
        CheckResult("NUBC ratio ceiling (poisson, m = 20n)", ratio <= 10.0, f"ratio {ratio:.3f}")
    )
    ratios = []
    for r in (10, 20, 40):
        Er = draw_ensemble("complex_gaussian", n, r * n, seed + r)
        ratios.append(empirical_nubc_ratio(Er, x, NoiseModel("poisson"), 20, seed + 3 * r))
    spread = max(ratios) / max(min(ratios), 1e-30)
    results.append(
        CheckResult(
            "NUBC ratio stable across m/n",
            spread <= 2.0,
            "ratios " + ", ".join(f"{v:.3f}" for v in ratios),
        )
    )
    return results


def _suite_packing(seed):
    results = []
    n = 200
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    pack = pack_hypotheses(x, 500, seed + 1)
    frac = separation_fraction(pack)
    results.append(
        CheckResult(
            "pack separation at n = 200", frac >= 0.99, f"{frac:.4f} of pairs in bounds"
        )
    )
    scaled = rescale_pack(pack, 0.1)
    err = max(
        float(np.max(np.abs((x + 0.1 * (z - x)) - w)))
        for z, w in zip(pack.members, scaled.members)
    )
    results.append(CheckResult("pack rescaling exact", err <= 1e-12, f"max dev {err:.2e}"))
    try:
        pack_hypotheses(np.ones(4), 10, seed)
        small_ok = False
    except InvalidArgumentError:
        small_ok = True
    results.append(CheckResult("pack rejects n < 8", small_ok, "invalid-argument raised"))
    return results


def _suite_kl(seed):
    results = []
    rng = np.random.default_rng(seed)
    ok = True
    for model in (NoiseModel("poisson"), NoiseModel("gaussian", scale=1.0)):
        for _ in range(100):
            n = 8
            E = draw_ensemble("complex_gaussian", n, 50, int(rng.integers(2 ** 63)))
            x = rng.standard_normal(n)
            x /= np.linalg.norm(x)
            z = x + 0.05 * rng.standard_normal(n)
            _, _, h = kl_bounds(E, z, x, model)
            ok &= h
    results.append(CheckResult("KL bounds on near-colinear pairs", ok, "poisson and gaussian"))
    return results


SUITES = {
    "propositions": _suite_propositions,
    "slbc": _suite_slbc,
    "nubc": _suite_nubc,
    "packing": _suite_packing,
    "kl": _suite_kl,
}


def run_suite(name, seed=0):
    """Run one named suite and return its CheckResults."""
    if name not in SUITES:
        raise InvalidArgumentError(f"unknown suite: {name!r}")
    return SUITES[name](seed)
