"""On-disk data model: JSONL manifests plus binary token-embedding blobs.

A manifest line describes one prompt and its K sampled responses; each
response points at a blob file holding the m x d float32 matrix of retained
continuation-token hidden states. Blobs store only what the scorer consumes:
prompt-segment and EOS exclusion happens upstream in the extractor.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

BLOB_MAGIC = b"WDEM"
BLOB_VERSION = 1
_HEADER = struct.Struct("<4sIII")  # magic, version, rows, cols (u32 LE)


class BlobFormatError(ValueError):
    """Embedding blob is malformed or violates the format contract."""


class ManifestError(ValueError):
    """Manifest line is malformed or internally inconsistent."""


def write_embedding(matrix, path) -> None:
    """Write an m x d matrix as a blob; byte output is deterministic."""
    arr = np.ascontiguousarray(matrix, dtype=np.float32)
    if arr.ndim != 2:
        raise BlobFormatError(f"embedding must be 2-D, got shape {arr.shape}")
    m, d = arr.shape
    if d < 1:
        raise BlobFormatError("embedding must have at least one column")
    if not np.all(np.isfinite(arr)):
        raise BlobFormatError("embedding contains non-finite values")
    header = _HEADER.pack(BLOB_MAGIC, BLOB_VERSION, m, d)
    Path(path).write_bytes(header + arr.astype("<f4", copy=False).tobytes(order="C"))


def read_embedding(path) -> np.ndarray:
    """Read a blob back into a float32 matrix, bit-exact with the writer."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise BlobFormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, m, d = _HEADER.unpack_from(data)
    if magic != BLOB_MAGIC:
        raise BlobFormatError(f"{path}: bad magic {magic!r}")
    if version != BLOB_VERSION:
        raise BlobFormatError(f"{path}: unsupported version {version}")
    if d < 1:
        raise BlobFormatError(f"{path}: column count must be >= 1")
    expected = 4 * m * d
    payload = len(data) - _HEADER.size
    if payload < expected:
        raise BlobFormatError(
            f"{path}: truncated payload, declared {m}x{d} needs {expected} bytes, found {payload}"
        )
    if payload > expected:
        raise BlobFormatError(f"{path}: {payload - expected} trailing bytes after payload")
    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    return values.reshape(m, d).astype(np.float32)


@dataclass
class ResponseSample:
    """One sampled response: decoded text plus its token-embedding support."""

    response_id: str
    text: str
    embedding_path: Path | None = None
    embedding: np.ndarray | None = None
    token_logprobs: list[float] | None = None

    def embedding_matrix(self) -> np.ndarray:
        if self.embedding is not None:
            return self.embedding
        if self.embedding_path is None:
            raise ManifestError(f"response {self.response_id!r} has no embedding source")
        return read_embedding(self.embedding_path)


@dataclass
class PromptRecord:
    """A prompt with its K sampled responses and optional reference/label."""

    prompt_id: str
    prompt_text: str
    responses: list[ResponseSample]
    reference: str | None = None
    label: int | None = None
    metadata: dict[str, str] = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.responses)


def _parse_response(obj, line_no: int, base_dir: Path) -> ResponseSample:
    if not isinstance(obj, dict):
        raise ManifestError(f"line {line_no}: response entry is not an object")
    for key in ("response_id", "text", "embedding_file"):
        if key not in obj:
            raise ManifestError(f"line {line_no}: response missing {key!r}")
    path = base_dir / obj["embedding_file"]
    if not path.is_file():
        raise ManifestError(f"line {line_no}: dangling embedding reference {obj['embedding_file']!r}")
    logprobs = obj.get("token_logprobs")
    if logprobs is not None:
        logprobs = [float(x) for x in logprobs]
        if any(x > 0.0 for x in logprobs):
            raise ManifestError(f"line {line_no}: token_logprobs must be <= 0")
    return ResponseSample(
        response_id=str(obj["response_id"]),
        text=str(obj["text"]),
        embedding_path=path,
        token_logprobs=logprobs,
    )


def read_manifest(path) -> list[PromptRecord]:
    """Parse a JSONL manifest into PromptRecords, preserving line order."""
    path = Path(path)
    base_dir = path.parent
    records: list[PromptRecord] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"line {line_no}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise ManifestError(f"line {line_no}: expected a JSON object")
            for key in ("prompt_id", "prompt_text", "responses"):
                if key not in obj:
                    raise ManifestError(f"line {line_no}: missing {key!r} field")
            prompt_id = str(obj["prompt_id"])
            if prompt_id in seen:
                raise ManifestError(f"line {line_no}: duplicate prompt_id {prompt_id!r}")
            seen.add(prompt_id)
            if not isinstance(obj["responses"], list):
                raise ManifestError(f"line {line_no}: 'responses' must be a list")
            label = obj.get("label")
            if label is not None:
                label = int(label)
                if label not in (0, 1):
                    raise ManifestError(f"line {line_no}: label must be 0, 1 or null")
            metadata = obj.get("metadata") or {}
            if not isinstance(metadata, dict):
                raise ManifestError(f"line {line_no}: 'metadata' must be an object")
            records.append(
                PromptRecord(
                    prompt_id=prompt_id,
                    prompt_text=str(obj["prompt_text"]),
                    responses=[_parse_response(r, line_no, base_dir) for r in obj["responses"]],
                    reference=None if obj.get("reference") is None else str(obj["reference"]),
                    label=label,
                    metadata={str(k): str(v) for k, v in metadata.items()},
                )
            )
    return records


def write_manifest(records, path, blob_dirname: str = "blobs") -> Path:
    """Write records as a JSONL manifest, materializing in-memory embeddings.

    In-memory embeddings are written as blobs under ``blob_dirname`` next to
    the manifest; path-backed embeddings are re-written there as well so the
    manifest directory is self-contained. Output bytes are deterministic for
    identical records.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob_dir = path.parent / blob_dirname
    blob_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for rec in records:
        responses = []
        for sample in rec.responses:
            rel = f"{blob_dirname}/{rec.prompt_id}__{sample.response_id}.wdem"
            write_embedding(sample.embedding_matrix(), path.parent / rel)
            responses.append(
                {
                    "response_id": sample.response_id,
                    "text": sample.text,
                    "embedding_file": rel,
                    "token_logprobs": sample.token_logprobs,
                }
            )
        lines.append(
            json.dumps(
                {
                    "prompt_id": rec.prompt_id,
                    "prompt_text": rec.prompt_text,
                    "reference": rec.reference,
                    "label": rec.label,
                    "metadata": rec.metadata,
                    "responses": responses,
                },
                ensure_ascii=False,
                separators=(",", ":"),
            )
        )
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    return path


def warn_excluded(prompt_id: str, reason: str) -> None:
    warnings.warn(f"prompt {prompt_id!r} excluded: {reason}", stacklevel=3)
