import numpy as np
import pytest

from wdsig.ot import w2_distance
from wdsig.signals import SignalConfig, kernelize, spectrum
from wdsig.stability import (
    _avg_wd_of,
    check_avgwd_lipschitz,
    check_lemma_token_bound,
    check_spectral_chain,
    check_two_sided_stability,
    run_all_checks,
)


def test_token_bound_zero_noise_trivial():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(6, 4))
    assert w2_distance(z, z) <= 1e-9  # both sides zero, slack zero


def test_token_bound_single_token_equality():
    # m = 1: W2 of Diracs equals the Frobenius gap exactly
    z = np.array([[1.0, 2.0]])
    z_pert = np.array([[4.0, 6.0]])
    gap = np.linalg.norm(z - z_pert)
    assert w2_distance(z, z_pert) == pytest.approx(gap, abs=1e-12)


def test_token_bound_small_run_no_violations():
    report = check_lemma_token_bound(trials=60, seed=1)
    assert report.trial_count == 60
    assert report.violations == 0
    assert report.max_slack >= -1e-9


def test_two_sided_identical_measures_trivial():
    rng = np.random.default_rng(2)
    mu = rng.normal(size=(4, 3))
    nu = rng.normal(size=(5, 3))
    lhs = abs(w2_distance(mu, nu) - w2_distance(mu, nu))
    assert lhs == 0.0


def test_two_sided_single_points_reduce_to_triangle():
    # single-point measures on a line: plain real-number inequality
    a, b, a2, b2 = 0.0, 5.0, 1.0, 3.0
    lhs = abs(abs(a - b) - abs(a2 - b2))
    rhs = abs(a - a2) + abs(b - b2)
    assert lhs <= rhs
    mu, nu = np.array([[a]]), np.array([[b]])
    mu2, nu2 = np.array([[a2]]), np.array([[b2]])
    assert abs(w2_distance(mu, nu) - w2_distance(mu2, nu2)) <= (
        w2_distance(mu, mu2) + w2_distance(nu, nu2) + 1e-12
    )


def test_two_sided_small_run_no_violations():
    report = check_two_sided_stability(trials=60, seed=3)
    assert report.violations == 0


def test_avgwd_translation_invariance():
    rng = np.random.default_rng(4)
    supports = [rng.normal(size=(5, 3)) for _ in range(4)]
    shifted = [z + np.array([7.0, -3.0, 2.0]) for z in supports]
    assert _avg_wd_of(shifted) == pytest.approx(_avg_wd_of(supports), abs=1e-9)


def test_avgwd_single_perturbed_sample_bound():
    rng = np.random.default_rng(5)
    k = 5
    supports = [rng.normal(size=(6, 3)) for _ in range(k)]
    perturbed = [z.copy() for z in supports]
    perturbed[0] = supports[0] + 0.2 * rng.normal(size=supports[0].shape)
    eps0 = np.linalg.norm(supports[0] - perturbed[0]) / np.sqrt(supports[0].shape[0])
    change = abs(_avg_wd_of(supports) - _avg_wd_of(perturbed))
    assert change <= 2.0 / k * eps0 + 1e-9


def test_avgwd_small_run_no_violations():
    report = check_avgwd_lipschitz(trials=25, seed=6)
    assert report.violations == 0


def test_spectral_chain_identical_matrices_trivial():
    cfg = SignalConfig(bandwidth_mode="fixed", fixed_bandwidth=1.0)
    D = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.5], [2.0, 1.5, 0.0]])
    K1 = kernelize(D, cfg).matrix
    assert np.linalg.norm(K1 - K1) == 0.0


def test_spectral_chain_rank_one_perturbation():
    cfg = SignalConfig(bandwidth_mode="fixed", fixed_bandwidth=1.0)
    entry_bound = 3.0
    D = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.5], [2.0, 1.5, 0.0]])
    u = np.array([0.2, -0.1, 0.3])
    D2 = np.clip(D + np.outer(u, u), 0.0, entry_bound)
    np.fill_diagonal(D2, 0.0)
    K1, K2 = kernelize(D, cfg).matrix, kernelize(D2, cfg).matrix
    lipschitz = entry_bound / (1.0 + cfg.epsilon)
    assert np.linalg.norm(K1 - K2) <= lipschitz * np.linalg.norm(D - D2) + 1e-8
    lam1 = spectrum(K1, cfg).eigenvalues
    lam2 = spectrum(K2, cfg).eigenvalues
    assert np.linalg.norm(lam1 - lam2) <= np.linalg.norm(K1 - K2) + 1e-8


def test_spectral_chain_small_run_no_violations():
    report = check_spectral_chain(trials=100, seed=7)
    assert report.violations == 0
    assert report.max_slack >= -1e-8


def test_checks_deterministic_per_seed():
    a = check_lemma_token_bound(trials=30, seed=11)
    b = check_lemma_token_bound(trials=30, seed=11)
    assert a.max_slack == b.max_slack
    assert a.violations == b.violations


def test_run_all_checks_shape():
    reports = run_all_checks(trials=10, seed=12)
    assert set(reports) == {"token_bound", "two_sided", "avgwd_lipschitz", "spectral_chain"}
    for rep in reports.values():
        assert rep.trial_count == 10
        assert rep.violations == 0


def test_trials_must_be_positive():
    with pytest.raises(ValueError):
        check_lemma_token_bound(trials=0)
