"""Tests for the Wirtinger-flow solvers and initializations."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phaselab.core import Ensemble, draw_ensemble, phaseless_apply, random_signal
from phaselab.errors import InvalidArgumentError
from phaselab.metrics import dist_modulo_phase
from phaselab.noise import NoiseModel, observe
from phaselab.wirtinger import (
    WfConfig,
    hard_threshold,
    prior_scaled_init,
    sparse_wf_solve,
    spectral_init,
    truncated_spectral_init,
    wf_solve,
)


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        WfConfig(max_iters=0)
    with pytest.raises(InvalidArgumentError):
        WfConfig(tol=0.0)
    with pytest.raises(InvalidArgumentError):
        WfConfig(step_rule="newton")
    with pytest.raises(InvalidArgumentError):
        WfConfig(init="random")


# ---------------------------------------------------------------------------
# initializations


def test_spectral_init_zero_data():
    E = draw_ensemble("complex_gaussian", 8, 32, 0)
    assert np.array_equal(spectral_init(E, np.zeros(32)), np.zeros(8))


def test_spectral_init_repeated_row():
    phi = np.array([1.0 + 1.0j, -2.0, 0.5j], dtype=np.complex128)
    E = Ensemble(
        vectors=np.tile(phi, (5, 1)), family="complex_gaussian", K=1.0, mu=1.0
    )
    z = spectral_init(E, np.full(5, 3.0))
    # rank-1 data matrix: init colinear with phi
    cos = abs(np.vdot(z, phi)) / (np.linalg.norm(z) * np.linalg.norm(phi))
    assert cos == pytest.approx(1.0, abs=1e-9)


def test_spectral_init_noiseless_quality():
    # m = 50n, n = 16: dist(init, x) <= 0.4 ||x|| in >= 45/50 trials
    good = 0
    for t in range(50):
        E = draw_ensemble("complex_gaussian", 16, 800, 1000 + t)
        x = random_signal(16, 1.0, np.random.default_rng(2000 + t))
        z = spectral_init(E, phaseless_apply(E, x))
        good += dist_modulo_phase(z, x) <= 0.4
    assert good >= 45


def test_truncated_init_infinite_threshold_matches_spectral():
    E = draw_ensemble("complex_gaussian", 8, 80, 1)
    x = random_signal(8, 1.0, np.random.default_rng(1))
    y = phaseless_apply(E, x)
    assert np.array_equal(
        truncated_spectral_init(E, y, alpha=1e9), spectral_init(E, y)
    )


def test_truncated_init_excludes_corrupted_entry():
    E = draw_ensemble("complex_gaussian", 8, 80, 2)
    x = random_signal(8, 1.0, np.random.default_rng(2))
    y = phaseless_apply(E, x)
    y_bad = y.copy()
    y_bad[0] = 1e6 * np.mean(y)
    z_bad = truncated_spectral_init(E, y_bad)
    # independently rebuild the data matrix with the corrupted row zeroed out;
    # the truncated init must be colinear with its top eigenvector
    w = y_bad.copy()
    w[0] = 0.0
    Y = np.einsum("k,ki,kj->ij", w, E.vectors, E.vectors.conj()) / E.m
    _, U = np.linalg.eigh(Y)
    u = U[:, -1]
    cos = abs(np.vdot(z_bad, u)) / np.linalg.norm(z_bad)
    assert cos == pytest.approx(1.0, abs=1e-9)
    # while the plain spectral matrix is dominated by the corrupted row
    z_ref = spectral_init(E, y_bad)
    cos_ref = abs(np.vdot(z_ref, u)) / np.linalg.norm(z_ref)
    assert cos_ref < 0.9


def test_truncated_init_poisson_quality():
    # poisson, n = 10, m = 40n: dist(init, x) <= 0.6 ||x|| in >= 40/50 trials
    good = 0
    for t in range(50):
        E = draw_ensemble("complex_gaussian", 10, 400, 3000 + t)
        x = random_signal(10, 1.0, np.random.default_rng(4000 + t))
        obs = observe(E, x, NoiseModel("poisson"), 5000 + t)
        z = truncated_spectral_init(E, obs.y)
        good += dist_modulo_phase(z, x) <= 0.6
    assert good >= 40


def test_prior_scaled_init():
    x = random_signal(8, 1.0, np.random.default_rng(3))
    z = prior_scaled_init(x, np.random.default_rng(4))
    s = np.linalg.norm(z) / np.linalg.norm(x)
    assert 0.8 <= s <= 1.2
    assert dist_modulo_phase(z / s, x) == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# hard threshold


def test_hard_threshold_example():
    assert np.array_equal(hard_threshold(np.array([3.0, -1.0, 2.0]), 2), [3.0, 0.0, 2.0])


def test_hard_threshold_range():
    with pytest.raises(InvalidArgumentError):
        hard_threshold(np.ones(3), 0)
    with pytest.raises(InvalidArgumentError):
        hard_threshold(np.ones(3), 4)


def test_hard_threshold_tie_break():
    # equal magnitudes: lower index kept
    out = hard_threshold(np.array([1.0, -1.0, 1.0]), 2)
    assert np.array_equal(out, [1.0, -1.0, 0.0])


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 31), st.integers(min_value=1, max_value=10))
def test_hard_threshold_idempotent(seed, s):
    v = np.random.default_rng(seed).standard_normal(10)
    once = hard_threshold(v, s)
    assert np.array_equal(hard_threshold(once, s), once)


# ---------------------------------------------------------------------------
# wf_solve


def test_wf_stationary_at_truth():
    E = draw_ensemble("complex_gaussian", 12, 120, 5)
    x = random_signal(12, 1.0, np.random.default_rng(5))
    y = phaseless_apply(E, x)
    trace = wf_solve(E, y, WfConfig(), z0=x)
    assert trace.converged
    assert trace.iterations <= 1
    assert dist_modulo_phase(trace.estimate, x) <= 1e-12


def test_wf_zero_data():
    E = draw_ensemble("complex_gaussian", 8, 32, 6)
    trace = wf_solve(E, np.zeros(32), WfConfig())
    assert np.array_equal(trace.estimate, np.zeros(8))
    assert trace.converged
    assert trace.warning is not None


def test_wf_noiseless_recovery():
    # n = 16, m = 160, spectral init: dist <= 1e-5 ||x|| in >= 45/50 trials
    good = 0
    for t in range(50):
        E = draw_ensemble("complex_gaussian", 16, 160, 6000 + t)
        x = random_signal(16, 1.0, np.random.default_rng(7000 + t))
        trace = wf_solve(E, phaseless_apply(E, x), WfConfig())
        good += dist_modulo_phase(trace.estimate, x) <= 1e-5
    assert good >= 45


def test_wf_objective_monotone():
    E = draw_ensemble("complex_gaussian", 10, 100, 7)
    x = random_signal(10, 1.0, np.random.default_rng(7))
    obs = observe(E, x, NoiseModel("poisson"), 7)
    trace = wf_solve(E, obs.y, WfConfig())
    h = trace.objective_history
    assert np.all(h[6:] <= h[5:-1] + 1e-8)


def test_wf_phase_equivariance():
    E = draw_ensemble("complex_gaussian", 10, 100, 8)
    x = random_signal(10, 1.0, np.random.default_rng(8))
    theta = 0.87
    d0 = dist_modulo_phase(
        wf_solve(E, phaseless_apply(E, x), WfConfig()).estimate, x
    )
    d1 = dist_modulo_phase(
        wf_solve(E, phaseless_apply(E, np.exp(1j * theta) * x), WfConfig()).estimate,
        np.exp(1j * theta) * x,
    )
    assert d0 == pytest.approx(d1, abs=1e-8)


def test_wf_scale_covariance():
    E = draw_ensemble("complex_gaussian", 10, 120, 9)
    x = random_signal(10, 1.0, np.random.default_rng(9))
    base = dist_modulo_phase(wf_solve(E, phaseless_apply(E, x), WfConfig()).estimate, x)
    for c in (0.5, 2.0):
        d = dist_modulo_phase(
            wf_solve(E, phaseless_apply(E, c * x), WfConfig()).estimate, c * x
        )
        # both runs converge to machine-level errors; covariance within the
        # stated relative tolerance against the scaled signal norm
        assert abs(d - c * base) <= 1e-6 * c * np.linalg.norm(x)


# ---------------------------------------------------------------------------
# sparse solver


def test_sparse_full_support_matches_dense():
    E = draw_ensemble("complex_gaussian", 8, 80, 10)
    x = random_signal(8, 1.0, np.random.default_rng(10))
    y = phaseless_apply(E, x)
    dense = wf_solve(E, y, WfConfig())
    sparse = sparse_wf_solve(E, y, WfConfig(sparsity=8))
    assert np.array_equal(sparse.estimate, dense.estimate)
    assert np.array_equal(sparse.objective_history, dense.objective_history)


def test_sparse_estimate_exactly_sparse():
    E = draw_ensemble("complex_gaussian", 30, 150, 11)
    x = random_signal(30, 1.0, np.random.default_rng(11), sparsity=3)
    trace = sparse_wf_solve(E, phaseless_apply(E, x), WfConfig(sparsity=3))
    assert np.count_nonzero(trace.estimate) <= 3


def test_sparse_recovery_smoke():
    good = 0
    for t in range(6):
        E = draw_ensemble("complex_gaussian", 30, 150, 8000 + t)
        x = random_signal(30, 1.0, np.random.default_rng(9000 + t), sparsity=3)
        trace = sparse_wf_solve(E, phaseless_apply(E, x), WfConfig(sparsity=3))
        good += dist_modulo_phase(trace.estimate, x) <= 1e-4
    assert good >= 5


def test_sparse_sparsity_range():
    E = draw_ensemble("complex_gaussian", 8, 80, 12)
    with pytest.raises(InvalidArgumentError):
        sparse_wf_solve(E, np.zeros(80), WfConfig(sparsity=9))
    with pytest.raises(InvalidArgumentError):
        sparse_wf_solve(E, np.zeros(80), WfConfig())
