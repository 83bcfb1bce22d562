"""Extraction configuration."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ExtractorConfig:
    """Knobs for sampling and hidden-state extraction.

    The embedding layer is always the middle transformer block, index
    floor(L/2) into the hidden-state sequence whose entry 0 is the token
    embedding output (so the index names a block output).
    """

    model: str
    teacher_model: str | None = None
    k: int = 10
    temperature: float = 0.5
    top_k: int | None = None
    top_p: float | None = None
    max_new_tokens: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.temperature <= 0.0:
            raise ValueError("temperature must be > 0")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.top_p is not None and not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must lie in (0, 1]")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")
