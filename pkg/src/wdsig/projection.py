"""Fixed shared random projection applied to token embeddings before OT.

The projection matrix is a pure function of (seed, source_dim, target_dim):
entries are standard normals scaled to variance 1/target_dim, generated from
a Philox counter-based stream through the inverse normal CDF. Entry (i, j)
therefore sits at a fixed counter offset and the matrix is identical across
platforms and runs. Projecting up is pointless, so inputs with source_dim <=
target_dim pass through unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtri


@dataclass(frozen=True)
class ProjectionSpec:
    seed: int
    source_dim: int
    target_dim: int = 128

    def __post_init__(self):
        if self.source_dim < 1 or self.target_dim < 1:
            raise ValueError("source_dim and target_dim must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")


@lru_cache(maxsize=16)
def _projection_matrix(seed: int, source_dim: int, target_dim: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=seed))
    uniforms = gen.random(target_dim * source_dim, dtype=np.float64)
    entries = ndtri(uniforms) / np.sqrt(target_dim)
    matrix = entries.reshape(target_dim, source_dim)
    matrix.flags.writeable = False
    return matrix


def make_projection(spec: ProjectionSpec) -> np.ndarray:
    """Return the target_dim x source_dim matrix (cached, immutable)."""
    return _projection_matrix(spec.seed, spec.source_dim, spec.target_dim)


def project(matrix, spec: ProjectionSpec) -> np.ndarray:
    """Map each row z to Pz, or pass through when source_dim <= target_dim."""
    arr = np.asarray(matrix)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D embedding matrix, got shape {arr.shape}")
    if arr.shape[1] != spec.source_dim:
        raise ValueError(
            f"embedding has {arr.shape[1]} columns but projection expects {spec.source_dim}"
        )
    if spec.source_dim <= spec.target_dim:
        return arr
    return arr @ make_projection(spec).T
