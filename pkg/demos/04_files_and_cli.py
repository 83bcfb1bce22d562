# The on-disk interchange formats and the command-line pipeline.
#
# Datasets travel as a JSONL manifest plus one binary blob per response
# (magic "WDEM", u32 version/rows/cols, float32 payload). The CLI chains
# synth -> score -> eval -> export-heatmap over those files.

import tempfile
from pathlib import Path

import numpy as np

from wdsig import read_embedding, read_manifest, write_embedding
from wdsig.cli import main as wdsig_cli

work = Path(tempfile.mkdtemp(prefix="wdsig-demo-"))

# --- blob round trip ---------------------------------------------------------
matrix = np.random.default_rng(0).normal(size=(4, 3)).astype(np.float32)
blob = work / "example.wdem"
write_embedding(matrix, blob)
print(f"blob is {blob.stat().st_size} bytes (16 header + 4*m*d payload)")
print("round-trip exact:", np.array_equal(read_embedding(blob), matrix))

# --- synth -> score -> eval over the CLI ------------------------------------
data = work / "data"
wdsig_cli(["synth", "--out", str(data), "--n-prompts", "12", "--k", "8",
           "--separation", "9", "--seed", "5"])
records = read_manifest(data / "manifest.jsonl")
print(f"\nmanifest holds {len(records)} prompts, K={records[0].k}, "
      f"labels={[r.label for r in records[:6]]}...")

scores_dir = work / "scores"
wdsig_cli(["score", "--manifest", str(data / 'manifest.jsonl'), "--out", str(scores_dir),
           "--detectors", "avgwd,eigenwd", "--export-heatmaps"])
print("\nfirst score rows:")
for line in (scores_dir / "scores.csv").read_text().splitlines()[:5]:
    print(" ", line)

eval_dir = work / "eval"
wdsig_cli(["eval", "--manifest", str(data / 'manifest.jsonl'), "--out", str(eval_dir)])
print("\nevaluation report:")
for line in (eval_dir / "eval.csv").read_text().splitlines():
    print(" ", line)

heat = sorted((scores_dir / "heatmaps").glob("*.pgm"))[1]
print(f"\nheatmaps written next to the scores, e.g. {heat.name} "
      f"({heat.stat().st_size} bytes, P5 grayscale); darker = cheaper transform.")
print(f"\nall outputs under {work}")
