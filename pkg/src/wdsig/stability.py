"""Monte-Carlo verification of the robustness guarantees behind the signals.

Each check draws random instances, evaluates both sides of a proved
inequality, and counts violations beyond a small float tolerance. Bounds
verified:

  * token-level perturbation: W2(mu(Z), mu(Z')) <= ||Z - Z'||_F / sqrt(m)
    (the diagonal coupling bound);
  * two-sided stability: |W2(mu,nu) - W2(mu',nu')| <= W2(mu,mu') + W2(nu,nu');
  * the AvgWD Lipschitz bound |AvgWD - AvgWD'| <= (2/K) sum_i eps_i with
    eps_i = ||Z_i - Z'_i||_F / sqrt(m_i), plus its uniform-noise form
    (change <= 2 max_i eps_i);
  * the spectral chain with a fixed kernel bandwidth: the entrywise Gaussian
    map is Lipschitz with constant R / (b^2 + eps) on entries bounded by R,
    and sorted kernel spectra obey the Hoffman-Wielandt inequality.

One-solve bounds use tolerance 1e-9; bounds compounding two solves or
eigendecompositions use 1e-8.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ot import w2_distance
from .signals import SignalConfig, avg_wd, kernelize, spectrum

_TOL_SINGLE = 1e-9
_TOL_COMPOUND = 1e-8


@dataclass
class PerturbationReport:
    trial_count: int
    max_slack: float  # bound minus observed change, minimized over trials
    violations: int


def _report(slacks, tol) -> PerturbationReport:
    slacks = np.asarray(slacks, dtype=np.float64)
    return PerturbationReport(
        trial_count=len(slacks),
        max_slack=float(slacks.min()) if len(slacks) else float("inf"),
        violations=int(np.sum(slacks < -tol)),
    )


def check_lemma_token_bound(
    trials: int = 1000,
    m_range: tuple[int, int] = (1, 20),
    d_range: tuple[int, int] = (1, 16),
    noise_scale: float = 0.1,
    seed: int = 0,
) -> PerturbationReport:
    """W2 between same-size empirical measures vs. the Frobenius bound."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    slacks = []
    for _ in range(trials):
        m = int(rng.integers(m_range[0], m_range[1] + 1))
        d = int(rng.integers(d_range[0], d_range[1] + 1))
        z = rng.normal(size=(m, d))
        z_pert = z + noise_scale * rng.normal(size=(m, d))
        observed = w2_distance(z, z_pert)
        bound = float(np.linalg.norm(z - z_pert) / np.sqrt(m))
        slacks.append(bound - observed)
    return _report(slacks, _TOL_SINGLE)


def check_two_sided_stability(
    trials: int = 1000,
    m_range: tuple[int, int] = (1, 20),
    d_range: tuple[int, int] = (1, 16),
    noise_scale: float = 0.5,
    seed: int = 0,
) -> PerturbationReport:
    """|W2(mu,nu) - W2(mu',nu')| vs. W2(mu,mu') + W2(nu,nu')."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    slacks = []
    for _ in range(trials):
        d = int(rng.integers(d_range[0], d_range[1] + 1))
        m1 = int(rng.integers(m_range[0], m_range[1] + 1))
        m2 = int(rng.integers(m_range[0], m_range[1] + 1))
        mu = rng.normal(size=(m1, d))
        nu = rng.normal(size=(m2, d))
        mu_pert = mu + noise_scale * rng.normal(size=(m1, d))
        nu_pert = nu + noise_scale * rng.normal(size=(m2, d))
        observed = abs(w2_distance(mu, nu) - w2_distance(mu_pert, nu_pert))
        bound = w2_distance(mu, mu_pert) + w2_distance(nu, nu_pert)
        slacks.append(bound - observed)
    return _report(slacks, _TOL_COMPOUND)


def check_avgwd_lipschitz(
    trials: int = 1000,
    k_range: tuple[int, int] = (3, 8),
    m_range: tuple[int, int] = (1, 20),
    d_range: tuple[int, int] = (1, 16),
    noise_scale: float = 0.1,
    seed: int = 0,
) -> PerturbationReport:
    """|AvgWD - AvgWD'| vs. (2/K) sum eps_i, and the uniform-eps corollary."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    slacks = []
    for _ in range(trials):
        k = int(rng.integers(k_range[0], k_range[1] + 1))
        d = int(rng.integers(d_range[0], d_range[1] + 1))
        samples = []
        perturbed = []
        eps = []
        for _i in range(k):
            m = int(rng.integers(m_range[0], m_range[1] + 1))
            z = rng.normal(size=(m, d))
            z_pert = z + noise_scale * rng.normal(size=(m, d))
            samples.append(z)
            perturbed.append(z_pert)
            eps.append(float(np.linalg.norm(z - z_pert) / np.sqrt(m)))
        observed = abs(_avg_wd_of(samples) - _avg_wd_of(perturbed))
        bound = 2.0 / k * float(np.sum(eps))
        uniform_bound = 2.0 * float(np.max(eps))
        slacks.append(min(bound - observed, uniform_bound - observed))
    return _report(slacks, _TOL_SINGLE)


def _avg_wd_of(supports) -> float:
    k = len(supports)
    D = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            D[i, j] = D[j, i] = w2_distance(supports[i], supports[j])
    return avg_wd(D)


def check_spectral_chain(
    trials: int = 1000,
    k_range: tuple[int, int] = (3, 10),
    bandwidth: float = 1.0,
    entry_bound: float = 3.0,
    noise_scale: float = 0.5,
    alpha: float = 1e-6,
    epsilon: float = 1e-6,
    seed: int = 0,
) -> PerturbationReport:
    """Kernel Lipschitz constant R/(b^2+eps) and the Hoffman-Wielandt step.

    Requires a fixed bandwidth: the median heuristic would change per matrix
    and the bound assumes b, eps, alpha are held constant.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfg = SignalConfig(
        alpha=alpha, epsilon=epsilon, bandwidth_mode="fixed", fixed_bandwidth=bandwidth
    )
    lipschitz = entry_bound / (bandwidth * bandwidth + epsilon)
    rng = np.random.default_rng(seed)
    slacks = []
    for _ in range(trials):
        k = int(rng.integers(k_range[0], k_range[1] + 1))
        D = _random_distances(rng, k, entry_bound)
        noise = rng.normal(scale=noise_scale, size=(k, k))
        D_pert = np.clip(D + (noise + noise.T) / 2.0, 0.0, entry_bound)
        np.fill_diagonal(D_pert, 0.0)
        K1 = kernelize(D, cfg).matrix
        K2 = kernelize(D_pert, cfg).matrix
        kernel_gap = float(np.linalg.norm(K1 - K2))
        kernel_bound = lipschitz * float(np.linalg.norm(D - D_pert))
        lam1 = spectrum(K1, cfg).eigenvalues
        lam2 = spectrum(K2, cfg).eigenvalues
        spectral_gap = float(np.linalg.norm(lam1 - lam2))
        slacks.append(min(kernel_bound - kernel_gap, kernel_gap - spectral_gap))
    return _report(slacks, _TOL_COMPOUND)


def _random_distances(rng, k: int, entry_bound: float) -> np.ndarray:
    D = rng.uniform(0.0, entry_bound, size=(k, k))
    D = (D + D.T) / 2.0
    np.fill_diagonal(D, 0.0)
    return D


def run_all_checks(
    trials: int = 1000, seed: int = 0, noise_scale: float = 0.1, fixed_bandwidth: float = 1.0
) -> dict[str, PerturbationReport]:
    """All four checks with shared knobs, keyed by check name."""
    return {
        "token_bound": check_lemma_token_bound(trials, noise_scale=noise_scale, seed=seed),
        "two_sided": check_two_sided_stability(
            trials, noise_scale=max(noise_scale, 0.5), seed=seed
        ),
        "avgwd_lipschitz": check_avgwd_lipschitz(trials, noise_scale=noise_scale, seed=seed),
        "spectral_chain": check_spectral_chain(
            trials, bandwidth=fixed_bandwidth, seed=seed
        ),
    }
