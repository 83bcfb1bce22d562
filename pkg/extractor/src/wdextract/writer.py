"""Interchange-format writers.

Implements the consumer's on-disk contract directly (JSONL manifest plus
"WDEM" embedding blobs) so this package couples to the scorer only through
the file formats.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

BLOB_MAGIC = b"WDEM"
BLOB_VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_embedding_blob(matrix: np.ndarray, path: Path) -> None:
    """m x d float32 matrix -> magic, version, rows, cols, row-major payload."""
    arr = np.ascontiguousarray(matrix, dtype=np.float32)
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise ValueError(f"blob needs an m x d matrix with d >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("blob values must be finite")
    header = _HEADER.pack(BLOB_MAGIC, BLOB_VERSION, arr.shape[0], arr.shape[1])
    path.parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(header + arr.astype("<f4", copy=False).tobytes(order="C"))


def response_entry(
    response_id: str,
    text: str,
    embedding_file: str,
    token_logprobs: list[float] | None,
) -> dict:
    if token_logprobs is not None:
        token_logprobs = [min(float(x), 0.0) for x in token_logprobs]
    return {
        "response_id": response_id,
        "text": text,
        "embedding_file": embedding_file,
        "token_logprobs": token_logprobs,
    }


def manifest_line(
    prompt_id: str,
    prompt_text: str,
    responses: list[dict],
    reference: str | None = None,
    label: int | None = None,
    metadata: dict[str, str] | None = None,
) -> str:
    return json.dumps(
        {
            "prompt_id": prompt_id,
            "prompt_text": prompt_text,
            "reference": reference,
            "label": label,
            "metadata": metadata or {},
            "responses": responses,
        },
        ensure_ascii=False,
        separators=(",", ":"),
    )


def write_manifest_file(lines: list[str], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path
