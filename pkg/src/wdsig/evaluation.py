"""Label construction, AUROC, synthetic datasets, and ablation sweeps.

The sweep engine computes per-record features (distance matrix, pooled
embeddings, pairwise text similarities) once; a grid point (K, p) then reuses
the leading K x K block of the cached distance matrix, because subsampling
always takes the first K responses.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from . import baselines, signals
from .ot import EmptySupportError
from .projection import ProjectionSpec
from .records import BlobFormatError, PromptRecord, ResponseSample, warn_excluded

DETECTORS = ("avgwd", "eigenwd", "er", "es", "lne", "ls")


@dataclass(frozen=True)
class LabeledScore:
    prompt_id: str
    score: float
    label: int


@dataclass
class EvalReport:
    detector: str
    dataset: str
    model: str
    k: int
    p: float
    auroc: float | None  # None when undefined (single class or no data)
    n_pos: int
    n_neg: int
    skipped: int


def make_labels(records, threshold: float = 0.5) -> list[int | None]:
    """Binary labels per record: pass through stored labels, else ROUGE-L rule.

    The first response is compared against the reference; ROUGE-L >= threshold
    means faithful (0). Records with neither a label nor a reference come back
    as None with a warning.
    """
    labels: list[int | None] = []
    for rec in records:
        if rec.label is not None:
            labels.append(int(rec.label))
        elif rec.reference is not None and rec.responses:
            score = baselines.rouge_l(rec.responses[0].text, rec.reference)
            labels.append(0 if score >= threshold else 1)
        else:
            warn_excluded(rec.prompt_id, "no label and no reference")
            labels.append(None)
    return labels


def auroc(scores) -> float:
    """Mann-Whitney AUROC with half credit for ties."""
    scores = list(scores)
    values = np.array([s.score for s in scores], dtype=np.float64)
    labels = np.array([s.label for s in scores], dtype=np.int64)
    if values.size and not np.all(np.isfinite(values)):
        raise ValueError("scores must be finite")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC undefined: need at least one positive and one negative")
    ranks = rankdata(values)  # average rank on ties
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def synth_dataset(
    n_prompts: int,
    k: int,
    separation: float,
    seed: int,
    mode_count_halluc: int = 3,
    dim: int = 16,
    token_low: int = 5,
    token_high: int = 30,
    resample_prob: float = 0.4,
    mode_jitter_frac: float = 0.06,
) -> list[PromptRecord]:
    """Desk-scale synthetic prompts with known labels.

    Mimics sampling collapse: each prompt draws one token cloud from a unit
    Gaussian cluster, and responses repeat it (exact duplicates, as stochastic
    decoding produces for consistent prompts) except that each response is
    independently redrawn from its cluster with probability resample_prob.
    Faithful prompts keep every response in the one cluster. Hallucinated
    prompts shift responses round-robin across mode_count_halluc cluster
    centers sitting `separation` apart (in within-cluster sigma units) and
    add per-token jitter of scale mode_jitter_frac * separation, so their
    kernel spectra carry many small but non-negligible eigenvalues where
    faithful spectra collapse to the diagonal-shift floor. Both knobs scale
    with separation, so at separation 0 the two classes follow the identical
    process. Response texts quantize the first two embedding coordinates so
    text detectors see the same geometry.
    """
    if n_prompts < 2 or k < 2:
        raise ValueError("need n_prompts >= 2 and k >= 2")
    if mode_count_halluc < 1 or mode_count_halluc > dim:
        raise ValueError("mode_count_halluc must be in [1, dim]")
    rng = np.random.default_rng(seed)
    records = []
    for idx in range(n_prompts):
        hallucinated = idx % 2 == 1
        base = rng.normal(0.0, 3.0, size=dim)
        m0 = int(rng.integers(token_low, token_high + 1))
        cloud = base + rng.normal(size=(m0, dim))
        offsets = np.zeros((1, dim))
        jitter = 0.0
        if hallucinated:
            raw = rng.normal(size=(dim, mode_count_halluc))
            ortho, _ = np.linalg.qr(raw)
            offsets = (separation / np.sqrt(2.0)) * ortho[:, :mode_count_halluc].T
            jitter = mode_jitter_frac * separation
        responses = []
        for r in range(k):
            offset = offsets[r % len(offsets)]
            if rng.random() < resample_prob:
                m = int(rng.integers(token_low, token_high + 1))
                tokens = base + offset + rng.normal(size=(m, dim))
            else:
                tokens = cloud + offset
            if jitter > 0.0:
                tokens = tokens + jitter * rng.normal(size=tokens.shape)
            tokens = tokens.astype(np.float32)
            text = " ".join(f"w{int(round(float(z[0])))}x{int(round(float(z[1])))}" for z in tokens)
            responses.append(ResponseSample(response_id=f"r{r}", text=text, embedding=tokens))
        records.append(
            PromptRecord(
                prompt_id=f"p{idx:05d}",
                prompt_text=f"synthetic prompt {idx}",
                responses=responses,
                reference=None,
                label=int(hallucinated),
                metadata={
                    "dataset": "synthetic",
                    "model": "synthetic",
                    "separation": repr(float(separation)),
                    "seed": str(seed),
                },
            )
        )
    return records


@dataclass
class RecordFeatures:
    """Everything the detectors need, computed once per record."""

    prompt_id: str
    label: int | None
    k: int
    metadata: dict
    distance: np.ndarray | None = None
    pooled: np.ndarray | None = None
    text_sims: np.ndarray | None = None  # pairwise ROUGE-L, symmetric, unit diagonal
    logprob_means: np.ndarray | None = None  # per-response mean logprob
    error: str | None = None


def compute_features(
    record: PromptRecord, label: int | None, seed: int = 42, proj_dim: int = 128
) -> RecordFeatures:
    feats = RecordFeatures(
        prompt_id=record.prompt_id, label=label, k=record.k, metadata=record.metadata
    )
    lp = [s.token_logprobs for s in record.responses]
    if all(x is not None and len(x) > 0 for x in lp):
        feats.logprob_means = np.array([float(np.mean(x)) for x in lp])
    texts = [s.text for s in record.responses]
    sims = np.eye(record.k)
    for i in range(record.k):
        for j in range(i + 1, record.k):
            sims[i, j] = sims[j, i] = baselines.rouge_l(texts[i], texts[j])
    feats.text_sims = sims
    try:
        d = record.responses[0].embedding_matrix().shape[1] if record.responses else 0
        proj = ProjectionSpec(seed=seed, source_dim=d, target_dim=proj_dim)
        feats.distance = signals.distance_matrix(record, proj)
        feats.pooled = baselines.pooled_embeddings(record, proj)
    except EmptySupportError as exc:
        feats.error = f"empty support (response {exc.response_id!r})"
    except (BlobFormatError, OSError, ValueError) as exc:
        feats.error = f"unusable embeddings ({exc})"
    return feats


def detector_score(
    feats: RecordFeatures,
    detector: str,
    k_sub: int,
    cfg: signals.SignalConfig,
    es_reg: float = 1e-3,
) -> float | None:
    """Score one detector on the first k_sub responses; None when unavailable."""
    if feats.error is not None or k_sub > feats.k or k_sub < 2:
        return None
    if detector == "avgwd":
        return signals.avg_wd(feats.distance[:k_sub, :k_sub])
    if detector == "eigenwd":
        block = feats.distance[:k_sub, :k_sub]
        return signals.eigen_wd(signals.spectrum(signals.kernelize(block, cfg), cfg), cfg)
    if detector == "er":
        return baselines.effective_rank(feats.pooled[:k_sub])
    if detector == "es":
        return baselines.eigenscore(feats.pooled[:k_sub], es_reg)
    if detector == "lne":
        if feats.logprob_means is None:
            return None
        return float(np.mean(-feats.logprob_means[:k_sub]))
    if detector == "ls":
        iu = np.triu_indices(k_sub, 1)
        return 1.0 - float(feats.text_sims[:k_sub, :k_sub][iu].mean())
    raise ValueError(f"unknown detector {detector!r}")


def _group_label(metadata: dict) -> tuple[str, str]:
    dataset = metadata.get("dataset", "")
    model = metadata.get("model", "")
    tau = metadata.get("temperature")
    if tau is not None:
        dataset = f"{dataset}@tau={tau}"
    return dataset, model


def evaluate_grid(
    features: list[RecordFeatures],
    k_grid,
    p_grid,
    cfg: signals.SignalConfig = signals.SignalConfig(),
    detectors=DETECTORS,
    es_reg: float = 1e-3,
) -> list[EvalReport]:
    """One EvalReport per (detector, group, k, p); k = None means full K."""
    groups: dict[tuple[str, str], list[RecordFeatures]] = {}
    for f in features:
        groups.setdefault(_group_label(f.metadata), []).append(f)
    reports = []
    for k_sub in k_grid:
        for p in p_grid:
            p_cfg = dataclasses.replace(cfg, p=p)
            for detector in detectors:
                for (dataset, model), members in sorted(groups.items()):
                    scored: list[LabeledScore] = []
                    skipped = 0
                    used_k = 0
                    for f in members:
                        k_use = f.k if k_sub is None else k_sub
                        value = (
                            None
                            if f.label is None
                            else detector_score(f, detector, k_use, p_cfg, es_reg)
                        )
                        if value is None:
                            skipped += 1
                            continue
                        used_k = max(used_k, k_use)
                        scored.append(LabeledScore(f.prompt_id, value, f.label))
                    n_pos = sum(1 for s in scored if s.label == 1)
                    n_neg = len(scored) - n_pos
                    try:
                        area = auroc(scored) if scored else None
                    except ValueError:
                        area = None
                    reports.append(
                        EvalReport(
                            detector=detector,
                            dataset=dataset,
                            model=model,
                            k=used_k if k_sub is None else k_sub,
                            p=p,
                            auroc=area,
                            n_pos=n_pos,
                            n_neg=n_neg,
                            skipped=skipped,
                        )
                    )
    return reports


def sweep(
    records,
    k_grid,
    p_grid,
    cfg: signals.SignalConfig = signals.SignalConfig(),
    seed: int = 42,
    proj_dim: int = 128,
    detectors=DETECTORS,
    es_reg: float = 1e-3,
    label_threshold: float = 0.5,
) -> list[EvalReport]:
    """Ablation sweep over response-count subsamples and quasi-norm orders."""
    labels = make_labels(records, label_threshold)
    features = [
        compute_features(rec, lab, seed=seed, proj_dim=proj_dim)
        for rec, lab in zip(records, labels)
    ]
    return evaluate_grid(features, k_grid, p_grid, cfg, detectors, es_reg)


def report_rows(reports) -> list[str]:
    """CSV lines for a report list, header included."""
    lines = ["detector,dataset,model,K,p,auroc,n_pos,n_neg,skipped"]
    for r in reports:
        area = "undefined" if r.auroc is None else repr(r.auroc)
        lines.append(
            f"{r.detector},{r.dataset},{r.model},{r.k},{r.p!r},{area},{r.n_pos},{r.n_neg},{r.skipped}"
        )
    return lines


def heatmap_csv(D: np.ndarray) -> str:
    """Full-precision CSV rendering of a distance matrix."""
    return "\n".join(",".join(repr(float(x)) for x in row) for row in np.asarray(D)) + "\n"


def heatmap_pgm(D: np.ndarray) -> bytes:
    """Min-max normalized 8-bit binary PGM; zero distance maps to intensity 0."""
    D = np.asarray(D, dtype=np.float64)
    k = D.shape[0]
    vmax = float(D.max())
    if vmax <= 0.0:
        img = np.zeros_like(D)
    else:
        img = np.rint(D / vmax * 255.0)
    header = f"P5\n{k} {k}\n255\n".encode("ascii")
    return header + img.astype(np.uint8).tobytes()
