"""Detection signals from the pairwise Wasserstein distance matrix.

For one prompt with K sampled responses, distance_matrix computes all
K(K-1)/2 exact W2 distances between projected token-embedding measures.
AvgWD is the mean over unordered pairs. EigenWD kernelizes the matrix with a
Gaussian kernel at the median-positive-distance bandwidth, takes the full
symmetric eigendecomposition, and returns the lp-to-l2 quasi-norm ratio of
the spectrum: >= 1 always, = 1 exactly in the rank-one case, larger when the
cost structure is dispersed across many modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from .ot import EmptySupportError, w2_distance
from .projection import ProjectionSpec, project
from .records import PromptRecord


@dataclass(frozen=True)
class SignalConfig:
    p: float = 0.1
    alpha: float = 1e-6  # diagonal shift added to the kernel
    epsilon: float = 1e-6  # bandwidth stabilizer inside the kernel exponent
    bandwidth_mode: str = "median"  # "median" or "fixed"
    fixed_bandwidth: float = 1.0
    eigen_floor: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.p < 2.0:
            raise ValueError("p must lie in (0, 2)")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be > 0")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be >= 0")
        if self.eigen_floor < 0.0:
            raise ValueError("eigen_floor must be >= 0")
        if self.bandwidth_mode not in ("median", "fixed"):
            raise ValueError("bandwidth_mode must be 'median' or 'fixed'")
        if self.bandwidth_mode == "fixed" and self.fixed_bandwidth <= 0.0:
            raise ValueError("fixed bandwidth must be > 0")


@dataclass
class KernelMatrix:
    matrix: np.ndarray
    bandwidth_used: float


@dataclass
class SpectrumSummary:
    eigenvalues: np.ndarray  # descending
    clamped_count: int


class PromptScores(NamedTuple):
    avg_wd: float
    eigen_wd: float
    distance_matrix: np.ndarray


def _check_distance_matrix(D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {D.shape}")
    if D.shape[0] < 2:
        raise ValueError("distance matrix needs K >= 2 responses")
    if not np.all(np.isfinite(D)):
        raise ValueError("distance matrix has non-finite entries")
    if not np.array_equal(D, D.T):
        raise ValueError("distance matrix must be exactly symmetric")
    if np.any(np.diag(D) != 0.0):
        raise ValueError("distance matrix must have a zero diagonal")
    if D.min() < 0:
        raise ValueError("distance matrix has negative entries")
    return D


def distance_matrix(record: PromptRecord, proj: ProjectionSpec) -> np.ndarray:
    """Pairwise W2 matrix over the record's responses, in response order."""
    if record.k < 2:
        raise ValueError(f"prompt {record.prompt_id!r} has K={record.k} < 2 responses")
    supports = []
    for sample in record.responses:
        emb = sample.embedding_matrix()
        if emb.shape[0] == 0:
            raise EmptySupportError(record.prompt_id, sample.response_id)
        supports.append(project(emb, proj))
    k = len(supports)
    D = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            D[i, j] = D[j, i] = w2_distance(supports[i], supports[j])
    return D


def avg_wd(D) -> float:
    """Mean transform cost over all unordered response pairs."""
    D = _check_distance_matrix(D)
    k = D.shape[0]
    total = float(D[np.triu_indices(k, 1)].sum())
    return 2.0 * total / (k * (k - 1))


def _lower_median(values: np.ndarray) -> float:
    ordered = np.sort(values)
    return float(ordered[(len(ordered) - 1) // 2])


def kernelize(D, cfg: SignalConfig = SignalConfig()) -> KernelMatrix:
    """Gaussian-kernelized similarity matrix with diagonal shift.

    Bandwidth is the lower median of strictly positive distances (1.0 when
    none exist) unless the config pins a fixed value. With epsilon = 0 the
    exponent is formed as (D / b)^2 / 2 so that rescaling D (and hence b)
    cancels exactly.
    """
    D = _check_distance_matrix(D)
    if cfg.bandwidth_mode == "fixed":
        b = float(cfg.fixed_bandwidth)
    else:
        positive = D[D > 0]
        b = _lower_median(positive) if positive.size else 1.0
    scale = b if cfg.epsilon == 0.0 else float(np.sqrt(b * b + cfg.epsilon))
    K = np.exp(-0.5 * np.square(D / scale))
    K[np.diag_indices_from(K)] += cfg.alpha
    return KernelMatrix(matrix=K, bandwidth_used=b)


def _jacobi_eigenvalues(A: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60) -> np.ndarray:
    """Full spectrum via cyclic Jacobi rotations; returns values descending."""
    A = np.array(A, dtype=np.float64, copy=True)
    n = A.shape[0]
    if n == 1:
        return A[0, :1].copy()
    idx = np.arange(n)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                diff = A[q, q] - A[p, p]
                if abs(apq) < 1e-300:
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = diff / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e154:  # theta**2 would overflow
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                tau = s / (1.0 + c)
                mask = (idx != p) & (idx != q)
                akp = A[mask, p].copy()
                akq = A[mask, q].copy()
                A[mask, p] = akp - s * (akq + tau * akp)
                A[mask, q] = akq + s * (akp - tau * akq)
                A[p, mask] = A[mask, p]
                A[q, mask] = A[mask, q]
                h = t * apq
                A[p, p] -= h
                A[q, q] += h
                A[p, q] = A[q, p] = 0.0
    return np.sort(np.diag(A))[::-1].copy()


def spectrum(kernel, cfg: SignalConfig = SignalConfig()) -> SpectrumSummary:
    """Eigenvalues of a symmetric matrix, descending, clamped at eigen_floor."""
    A = kernel.matrix if isinstance(kernel, KernelMatrix) else np.asarray(kernel, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"spectrum expects a square matrix, got shape {A.shape}")
    if A.shape[0] > 1024:
        raise ValueError("spectrum supports K <= 1024")
    if np.abs(A - A.T).max(initial=0.0) > 1e-9:
        raise ValueError("matrix is asymmetric beyond 1e-9")
    A = (A + A.T) / 2.0
    eigenvalues = _jacobi_eigenvalues(A)
    clamped = int(np.sum(eigenvalues < cfg.eigen_floor))
    if clamped:
        eigenvalues = np.maximum(eigenvalues, cfg.eigen_floor)
    return SpectrumSummary(eigenvalues=eigenvalues, clamped_count=clamped)


def eigen_wd(spectrum_or_values, cfg: SignalConfig = SignalConfig()) -> float:
    """Quasi-norm ratio ||lambda||_p / ||lambda||_2, evaluated in log domain.

    Small p makes the outer exponent 1/p large, so the sums are accumulated
    as log-sum-exp over p*log(lambda) to avoid overflow.
    """
    if isinstance(spectrum_or_values, SpectrumSummary):
        lam = spectrum_or_values.eigenvalues
    else:
        lam = np.asarray(spectrum_or_values, dtype=np.float64)
    if lam.ndim != 1 or lam.size == 0:
        raise ValueError("eigen_wd expects a nonempty 1-D spectrum")
    if lam.min() < 0:
        raise ValueError("eigen_wd expects a nonnegative spectrum")
    lam = lam[lam > 0]
    if lam.size == 0:
        raise ValueError("eigen_wd is undefined for an all-zero spectrum")
    log_lam = np.log(lam)
    log_num = logsumexp(cfg.p * log_lam) / cfg.p
    log_den = 0.5 * logsumexp(2.0 * log_lam)
    return float(np.exp(log_num - log_den))


def score_prompt(
    record: PromptRecord, proj: ProjectionSpec, cfg: SignalConfig = SignalConfig()
) -> PromptScores:
    """Both signals plus the distance matrix they were derived from."""
    D = distance_matrix(record, proj)
    summary = spectrum(kernelize(D, cfg), cfg)
    return PromptScores(
        avg_wd=avg_wd(D),
        eigen_wd=eigen_wd(summary, cfg),
        distance_matrix=D,
    )
