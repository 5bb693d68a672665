"""Measurement ensembles and the three measurement operators.

Signals are 1-d complex128 arrays of length n.  An ensemble stores its m
sampling vectors phi_k as the rows of an (m, n) complex128 array; numpy's
complex dtype keeps real/imaginary parts interleaved in row-major order,
which is the canonical layout all operators assume.

Inner products are conjugate-linear in the first argument:
<phi, z> = sum_j conj(phi_j) z_j.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

FAMILIES = ("complex_gaussian", "symmetrized_bernoulli_mix")

# Fourth-moment excess mu = E|phi|^4 - 1 per scalar entry.
# complex_gaussian: E|phi|^4 = 2. symmetrized_bernoulli_mix: each real part is
# a 0.5/0.5 mixture of Rademacher and N(0,1) (unit variance either way), so
# E X^4 = 0.5*1 + 0.5*3 = 2 and E|phi|^4 = (E X^4 + 2 E X^2 E Y^2 + E Y^4)/4 = 1.5.
_FAMILY_MU = {"complex_gaussian": 1.0, "symmetrized_bernoulli_mix": 0.5}


@dataclass(frozen=True)
class Ensemble:
    """m sampling vectors of length n, rows of `vectors`."""

    vectors: np.ndarray
    family: str
    K: float
    mu: float

    @property
    def m(self):
        return self.vectors.shape[0]

    @property
    def n(self):
        return self.vectors.shape[1]


@dataclass(frozen=True)
class BilinearEnsemble:
    """Independent left/right sampling vectors a_k, b_k for bilinear measurements."""

    left: np.ndarray
    right: np.ndarray
    family: str
    K: float

    @property
    def m(self):
        return self.left.shape[0]

    @property
    def n(self):
        return self.left.shape[1]


def _draw_matrix(family, n, m, rng):
    if family == "complex_gaussian":
        re = rng.standard_normal((m, n))
        im = rng.standard_normal((m, n))
    elif family == "symmetrized_bernoulli_mix":
        def mixed(shape):
            pick = rng.random(shape) < 0.5
            rad = rng.integers(0, 2, shape) * 2.0 - 1.0
            gau = rng.standard_normal(shape)
            return np.where(pick, rad, gau)

        re = mixed((m, n))
        im = mixed((m, n))
    else:
        raise InvalidArgumentError(f"unsupported ensemble family: {family!r}")
    return (re + 1j * im) / np.sqrt(2.0)


def draw_ensemble(family, n, m, seed):
    """Draw m i.i.d. sampling vectors of dimension n.

    Entries have unit variance split equally over real/imaginary parts.
    Deterministic for a fixed seed.
    """
    if n < 1 or m < 1:
        raise InvalidArgumentError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    if family not in FAMILIES:
        raise InvalidArgumentError(f"unsupported ensemble family: {family!r}")
    rng = np.random.default_rng(seed)
    vectors = _draw_matrix(family, n, m, rng)
    return Ensemble(vectors=vectors, family=family, K=1.0, mu=_FAMILY_MU[family])


def draw_bilinear_ensemble(family, n, m, seed):
    """Draw independent left/right ensembles for bilinear measurements."""
    if n < 1 or m < 1:
        raise InvalidArgumentError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    if family not in FAMILIES:
        raise InvalidArgumentError(f"unsupported ensemble family: {family!r}")
    rng = np.random.default_rng(seed)
    left = _draw_matrix(family, n, m, rng)
    right = _draw_matrix(family, n, m, rng)
    return BilinearEnsemble(left=left, right=right, family=family, K=1.0)


def random_signal(n, scale, rng, real=False, sparsity=None):
    """Uniform random direction with ||x||_2 = scale.

    With `sparsity` s, the signal is supported on s coordinates chosen
    uniformly at random.
    """
    if real:
        x = rng.standard_normal(n).astype(np.complex128)
    else:
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    if sparsity is not None:
        keep = rng.choice(n, size=sparsity, replace=False)
        mask = np.zeros(n, dtype=bool)
        mask[keep] = True
        x = np.where(mask, x, 0.0)
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        x[0] = 1.0
        nrm = 1.0
    return (scale / nrm) * x


def phaseless_apply(E, z):
    """Entry k = |<phi_k, z>|^2."""
    z = np.asarray(z, dtype=np.complex128)
    if z.shape != (E.n,):
        raise InvalidArgumentError(
            f"signal dim {z.shape} does not match ensemble n={E.n}"
        )
    ip = E.vectors.conj() @ z
    return np.abs(ip) ** 2


def lifted_apply(E, Z):
    """Entry k = phi_k^* Z phi_k for Hermitian Z (real output)."""
    Z = np.asarray(Z, dtype=np.complex128)
    if Z.shape != (E.n, E.n):
        raise InvalidArgumentError(
            f"matrix shape {Z.shape} does not match ensemble n={E.n}"
        )
    V = E.vectors
    vals = np.einsum("ki,ij,kj->k", V.conj(), Z, V, optimize=True)
    return vals.real


def bilinear_apply(B, Z):
    """Entry k = b_k^* Z a_k, so that Z = x h^* reproduces y_k = (b_k^* x)(h^* a_k)."""
    Z = np.asarray(Z, dtype=np.complex128)
    if Z.shape != (B.n, B.n):
        raise InvalidArgumentError(
            f"matrix shape {Z.shape} does not match ensemble n={B.n}"
        )
    return np.einsum("ki,ij,kj->k", B.right.conj(), Z, B.left, optimize=True)


def hermitize(A):
    """Exact Hermitian part (A + A^*)/2."""
    A = np.asarray(A, dtype=np.complex128)
    return 0.5 * (A + A.conj().T)


def eig_hermitian(A, check=True):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues descending, eigenvector columns).  Each eigenvector
    is scaled so its largest-magnitude entry is real-positive; on ties the
    lower index wins.  This makes outputs deterministic for golden tests.
    """
    A = np.asarray(A, dtype=np.complex128)
    if check and not np.allclose(A, A.conj().T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(A).max())):
        raise InvalidArgumentError("matrix is not Hermitian")
    w, U = np.linalg.eigh(hermitize(A))
    order = np.argsort(-w, kind="stable")
    w = w[order]
    U = U[:, order]
    for j in range(U.shape[1]):
        col = U[:, j]
        i = int(np.argmax(np.abs(col)))  # first max wins ties
        pivot = col[i]
        if np.abs(pivot) > 0.0:
            U[:, j] = col * (pivot.conj() / np.abs(pivot))
    return w, U
