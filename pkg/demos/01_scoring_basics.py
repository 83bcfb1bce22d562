# Scoring one prompt from scratch.
#
# A prompt with K sampled responses is represented by K token-embedding
# matrices (one row per generated token). The pairwise exact 2-Wasserstein
# distances between those point clouds form a K x K cost matrix; AvgWD is its
# mean off-diagonal entry and EigenWD measures how many "modes" the
# kernelized cost structure activates.

import numpy as np

from wdsig import (
    ProjectionSpec,
    PromptRecord,
    ResponseSample,
    SignalConfig,
    cost_matrix,
    score_prompt,
    solve_emd2,
    w2_distance,
)

rng = np.random.default_rng(0)

# --- a single transport problem -------------------------------------------
# Two tiny "responses": 3 tokens vs 4 tokens in a 2-d embedding space.
left = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
right = np.array([[2.0, 0.0], [2.0, 1.0], [3.0, 0.0], [2.5, 0.5]])

C = cost_matrix(left, right)
print("squared-Euclidean cost matrix:\n", np.round(C, 3))

plan = solve_emd2(C)
print("optimal transport plan (rows sum to 1/3, cols to 1/4):\n", np.round(plan.matrix, 4))
print("EMD2 objective:", round(plan.objective, 6))
print("W2 distance:", round(w2_distance(left, right), 6))

# --- a consistent prompt vs a fragmented one --------------------------------
# Consistent: the sampler kept returning the same answer (duplicate clouds
# plus one variant). Fragmented: three well-separated answer modes.
shared = rng.normal(size=(8, 2))
consistent = [shared, shared, shared + 0.0, shared, rng.normal(size=(6, 2))]
fragmented = [shared + np.array([12.0 * (i % 3), 0.0]) + 0.4 * rng.normal(size=(8, 2)) for i in range(5)]


def as_record(name, clouds):
    return PromptRecord(
        prompt_id=name,
        prompt_text="demo",
        responses=[
            ResponseSample(f"r{i}", f"answer {i}", embedding=np.asarray(z, np.float32))
            for i, z in enumerate(clouds)
        ],
    )


proj = ProjectionSpec(seed=42, source_dim=2, target_dim=128)  # 2 <= 128: pass-through
cfg = SignalConfig()  # p=0.1, alpha=epsilon=1e-6, median bandwidth

for name, clouds in (("consistent", consistent), ("fragmented", fragmented)):
    scores = score_prompt(as_record(name, clouds), proj, cfg)
    print(f"\n{name} prompt:")
    print("  distance matrix:\n", np.round(scores.distance_matrix, 3))
    print(f"  AvgWD   = {scores.avg_wd:.4f}")
    print(f"  EigenWD = {scores.eigen_wd:.4f}")

print("\nHigher values on both signals flag the fragmented prompt.")
