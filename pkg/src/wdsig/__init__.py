"""Distribution-complexity hallucination signals from exact optimal transport.

Score a prompt by how costly its K sampled responses are to transform into
one another in representation space: exact pairwise 2-Wasserstein distances
between token-embedding empirical measures give a K x K cost matrix, from
which AvgWD (mean transform cost) and EigenWD (spectral cost-structure
complexity) are derived, alongside training-free baselines and an AUROC
evaluation harness.
"""

__version__ = "0.1.0"

from .baselines import (
    MissingLogprobsError,
    effective_rank,
    eigenscore,
    length_normalized_entropy,
    lexical_similarity,
    pooled_embeddings,
    rouge_l,
)
from .evaluation import (
    DETECTORS,
    EvalReport,
    LabeledScore,
    auroc,
    make_labels,
    sweep,
    synth_dataset,
)
from .ot import (
    EmptySupportError,
    SolverError,
    TransportPlan,
    cost_matrix,
    solve_emd2,
    w2_distance,
)
from .projection import ProjectionSpec, make_projection, project
from .records import (
    BlobFormatError,
    ManifestError,
    PromptRecord,
    ResponseSample,
    read_embedding,
    read_manifest,
    write_embedding,
    write_manifest,
)
from .signals import (
    KernelMatrix,
    PromptScores,
    SignalConfig,
    SpectrumSummary,
    avg_wd,
    distance_matrix,
    eigen_wd,
    kernelize,
    score_prompt,
    spectrum,
)
from .stability import (
    PerturbationReport,
    check_avgwd_lipschitz,
    check_lemma_token_bound,
    check_spectral_chain,
    check_two_sided_stability,
    run_all_checks,
)

__all__ = [
    "DETECTORS",
    "BlobFormatError",
    "EmptySupportError",
    "EvalReport",
    "KernelMatrix",
    "LabeledScore",
    "ManifestError",
    "MissingLogprobsError",
    "PerturbationReport",
    "ProjectionSpec",
    "PromptRecord",
    "PromptScores",
    "ResponseSample",
    "SignalConfig",
    "SolverError",
    "SpectrumSummary",
    "TransportPlan",
    "auroc",
    "avg_wd",
    "check_avgwd_lipschitz",
    "check_lemma_token_bound",
    "check_spectral_chain",
    "check_two_sided_stability",
    "cost_matrix",
    "distance_matrix",
    "effective_rank",
    "eigen_wd",
    "eigenscore",
    "kernelize",
    "length_normalized_entropy",
    "lexical_similarity",
    "make_labels",
    "make_projection",
    "pooled_embeddings",
    "project",
    "read_embedding",
    "read_manifest",
    "rouge_l",
    "run_all_checks",
    "score_prompt",
    "solve_emd2",
    "spectrum",
    "sweep",
    "synth_dataset",
    "w2_distance",
    "write_embedding",
    "write_manifest",
]
