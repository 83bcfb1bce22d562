"""Dataset extraction for Wasserstein-based hallucination scoring.

Samples K responses per prompt from a causal LM, extracts mid-layer hidden
states of generated continuation tokens, records sampled-token logprobs, and
writes the scorer's interchange formats. A teacher-forcing mode covers
black-box target models via an accessible teacher.
"""

__version__ = "0.1.0"

from .config import ExtractorConfig
from .extract import (
    PromptSpec,
    TeacherItem,
    load_model_and_tokenizer,
    mid_layer_index,
    sample_and_extract,
    teacher_force,
)
from .writer import write_embedding_blob

__all__ = [
    "ExtractorConfig",
    "PromptSpec",
    "TeacherItem",
    "load_model_and_tokenizer",
    "mid_layer_index",
    "sample_and_extract",
    "teacher_force",
    "write_embedding_blob",
]
