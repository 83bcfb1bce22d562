"""Training-free comparison detectors over the same sampled generations.

All detectors share score polarity: higher means more hallucination risk.
Effective rank and eigenscore consume mean-pooled projected token embeddings
so every detector sees identical inputs; lexical similarity is inverted to
1 - mean pairwise ROUGE-L for the same reason.
"""

from __future__ import annotations

import string

import numpy as np

from .ot import EmptySupportError
from .projection import ProjectionSpec, project
from .records import PromptRecord

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


class MissingLogprobsError(ValueError):
    """Length-normalized entropy is unavailable without per-token logprobs."""

    def __init__(self, prompt_id: str):
        self.prompt_id = prompt_id
        super().__init__(f"prompt {prompt_id!r} lacks token logprobs on some response")


def _tokens(text: str) -> list[str]:
    # Lowercase, drop ASCII punctuation, split on Unicode whitespace.
    return text.lower().translate(_PUNCT_TABLE).split()


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            if x == y:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[-1]


def rouge_l(candidate: str, reference: str) -> float:
    """ROUGE-L F-measure on whitespace tokens; 0 when either side is empty."""
    cand = _tokens(candidate)
    ref = _tokens(reference)
    if not cand or not ref:
        return 0.0
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2.0 * precision * recall / (precision + recall)


def pooled_embeddings(record: PromptRecord, proj: ProjectionSpec) -> np.ndarray:
    """K x d matrix whose row i is the mean projected token embedding of response i."""
    if record.k < 2:
        raise ValueError(f"prompt {record.prompt_id!r} has K={record.k} < 2 responses")
    rows = []
    for sample in record.responses:
        emb = sample.embedding_matrix()
        if emb.shape[0] == 0:
            raise EmptySupportError(record.prompt_id, sample.response_id)
        rows.append(np.asarray(project(emb, proj), dtype=np.float64).mean(axis=0))
    return np.stack(rows)


def effective_rank(pooled: np.ndarray) -> float:
    """exp of the Shannon entropy of the normalized singular-value spectrum."""
    S = np.asarray(pooled, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] < 2:
        raise ValueError("effective_rank expects a K x d matrix with K >= 2")
    centered = S - S.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    total = sv.sum()
    if total <= 0.0:
        return 1.0  # all rows identical
    probs = sv[sv > 0] / total
    return float(np.exp(-np.sum(probs * np.log(probs))))


def eigenscore(pooled: np.ndarray, reg: float = 1e-3) -> float:
    """Mean log of regularized Gram eigenvalues of the centered rows."""
    S = np.asarray(pooled, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] < 2:
        raise ValueError("eigenscore expects a K x d matrix with K >= 2")
    if reg <= 0.0:
        raise ValueError("reg must be > 0")
    centered = S - S.mean(axis=0)
    gram = centered @ centered.T / S.shape[1]
    lam = np.linalg.eigvalsh(gram)
    return float(np.mean(np.log(lam + reg)))


def length_normalized_entropy(record: PromptRecord) -> float:
    """Mean per-token negative log-probability, averaged over responses."""
    per_response = []
    for sample in record.responses:
        lp = sample.token_logprobs
        if lp is None or len(lp) == 0:
            raise MissingLogprobsError(record.prompt_id)
        per_response.append(-float(np.mean(lp)))
    return float(np.mean(per_response))


def lexical_similarity(record: PromptRecord) -> float:
    """1 - mean pairwise ROUGE-L over texts, aligning polarity with the rest."""
    if record.k < 2:
        raise ValueError(f"prompt {record.prompt_id!r} has K={record.k} < 2 responses")
    texts = [sample.text for sample in record.responses]
    sims = [
        rouge_l(texts[i], texts[j])
        for i in range(len(texts))
        for j in range(i + 1, len(texts))
    ]
    return 1.0 - float(np.mean(sims))
