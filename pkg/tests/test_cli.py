import json

import numpy as np
import pytest

from wdsig.cli import main
from wdsig.records import read_manifest, write_embedding


@pytest.fixture(scope="module")
def synth_manifest(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    code = main(
        [
            "synth",
            "--out",
            str(out),
            "--n-prompts",
            "8",
            "--k",
            "10",
            "--separation",
            "8",
            "--seed",
            "2",
        ]
    )
    assert code == 0
    return out / "manifest.jsonl"


def test_synth_writes_expected_files(synth_manifest):
    out = synth_manifest.parent
    assert synth_manifest.is_file()
    assert (out / "run_config.json").is_file()
    blobs = sorted((out / "blobs").iterdir())
    assert len(blobs) == 8 * 10
    records = read_manifest(synth_manifest)
    assert len(records) == 8


def test_synth_regeneration_identical(tmp_path, synth_manifest):
    args = ["synth", "--out", str(tmp_path), "--n-prompts", "8", "--k", "10",
            "--separation", "8", "--seed", "2"]
    assert main(args) == 0
    assert (tmp_path / "manifest.jsonl").read_bytes() == synth_manifest.read_bytes()
    for blob in sorted((tmp_path / "blobs").iterdir()):
        twin = synth_manifest.parent / "blobs" / blob.name
        assert blob.read_bytes() == twin.read_bytes()


def test_score_rows_and_determinism(tmp_path, synth_manifest):
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    for out in (out1, out2):
        code = main(
            ["score", "--manifest", str(synth_manifest), "--out", str(out),
             "--detectors", "avgwd,eigenwd,er,es,ls"]
        )
        assert code == 0
    csv1 = (out1 / "scores.csv").read_bytes()
    assert csv1 == (out2 / "scores.csv").read_bytes()
    lines = csv1.decode().strip().split("\n")
    assert lines[0] == "prompt_id,detector,score"
    assert len(lines) == 1 + 8 * 5  # 8 prompts x 5 detectors
    assert (out1 / "run_config.json").is_file()


def test_score_thread_count_does_not_change_output(tmp_path, synth_manifest):
    out1, out2 = tmp_path / "t1", tmp_path / "t4"
    for out, threads in ((out1, "1"), (out2, "4")):
        assert main(
            ["score", "--manifest", str(synth_manifest), "--out", str(out),
             "--threads", threads]
        ) == 0
    assert (out1 / "scores.csv").read_bytes() == (out2 / "scores.csv").read_bytes()


def test_score_skips_empty_embedding_prompt(tmp_path, synth_manifest):
    import shutil

    broken_dir = tmp_path / "broken"
    shutil.copytree(synth_manifest.parent, broken_dir)
    manifest = broken_dir / "manifest.jsonl"
    first = json.loads(manifest.read_text().split("\n")[0])
    victim = broken_dir / first["responses"][0]["embedding_file"]
    write_embedding(np.zeros((0, 16), dtype=np.float32), victim)

    out = tmp_path / "out"
    assert main(["score", "--manifest", str(manifest), "--out", str(out)]) == 0
    body = (out / "scores.csv").read_text()
    assert first["prompt_id"] not in body  # absent from rows
    assert sum(1 for line in body.strip().split("\n")[1:]) > 0

    strict_out = tmp_path / "strict"
    code = main(
        ["score", "--manifest", str(manifest), "--out", str(strict_out), "--strict"]
    )
    assert code == 2


def test_eval_reports_auroc(tmp_path, synth_manifest):
    out = tmp_path / "eval"
    assert main(
        ["eval", "--manifest", str(synth_manifest), "--out", str(out),
         "--detectors", "avgwd,eigenwd"]
    ) == 0
    lines = (out / "eval.csv").read_text().strip().split("\n")
    assert lines[0] == "detector,dataset,model,K,p,auroc,n_pos,n_neg,skipped"
    assert len(lines) == 3
    for line in lines[1:]:
        fields = line.split(",")
        assert fields[1] == "synthetic"
        assert float(fields[5]) >= 0.9  # separation 8 separates cleanly


def test_eval_single_class_undefined(tmp_path, synth_manifest):
    # relabel everything faithful
    records = synth_manifest.read_text().strip().split("\n")
    rewritten = []
    for line in records:
        obj = json.loads(line)
        obj["label"] = 0
        rewritten.append(json.dumps(obj))
    manifest = synth_manifest.parent / "all_zero.jsonl"
    manifest.write_text("\n".join(rewritten) + "\n")
    out = tmp_path / "eval0"
    code = main(
        ["eval", "--manifest", str(manifest), "--out", str(out), "--detectors", "avgwd"]
    )
    assert code == 0
    assert ",undefined," in (out / "eval.csv").read_text()


def test_sweep_grid(tmp_path, synth_manifest):
    out = tmp_path / "sweep"
    assert main(
        ["sweep", "--manifest", str(synth_manifest), "--out", str(out),
         "--k-grid", "2,5", "--p-grid", "0.1,0.5", "--detectors", "avgwd,eigenwd"]
    ) == 0
    lines = (out / "sweep.csv").read_text().strip().split("\n")
    assert len(lines) == 1 + 2 * 2 * 2  # (k) x (p) x (detector)


def test_check_command(tmp_path):
    out = tmp_path / "checks"
    assert main(["check", "--out", str(out), "--trials", "15", "--seed", "3"]) == 0
    lines = (out / "checks.csv").read_text().strip().split("\n")
    assert lines[0] == "check,trials,violations,max_slack"
    assert len(lines) == 5
    for line in lines[1:]:
        assert line.split(",")[2] == "0"


def test_export_heatmap(tmp_path, synth_manifest):
    records = read_manifest(synth_manifest)
    pid = records[1].prompt_id
    out = tmp_path / "heat"
    assert main(
        ["export-heatmap", "--manifest", str(synth_manifest), "--prompt-id", pid,
         "--out", str(out)]
    ) == 0
    csv_lines = (out / f"{pid}.csv").read_text().strip().split("\n")
    matrix = np.array([[float(x) for x in line.split(",")] for line in csv_lines])
    assert matrix.shape == (10, 10)
    assert np.array_equal(matrix, matrix.T)
    assert np.all(np.diag(matrix) == 0.0)
    pgm = (out / f"{pid}.pgm").read_bytes()
    assert pgm.startswith(b"P5\n10 10\n255\n")


def test_export_heatmap_unknown_prompt(tmp_path, synth_manifest):
    code = main(
        ["export-heatmap", "--manifest", str(synth_manifest), "--prompt-id", "nope",
         "--out", str(tmp_path / "h")]
    )
    assert code == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as info:
        main(["score"])  # missing required flags
    assert info.value.code == 1


def test_missing_manifest_is_data_error(tmp_path):
    code = main(["score", "--manifest", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path)])
    assert code == 2


def test_unknown_detector_is_usage_error(tmp_path, synth_manifest):
    code = main(
        ["score", "--manifest", str(synth_manifest), "--out", str(tmp_path / "u"),
         "--detectors", "avgwd,bogus"]
    )
    assert code == 1


def test_score_heatmap_export_flag(tmp_path, synth_manifest):
    out = tmp_path / "withheat"
    assert main(
        ["score", "--manifest", str(synth_manifest), "--out", str(out), "--export-heatmaps"]
    ) == 0
    files = list((out / "heatmaps").iterdir())
    assert len(files) == 16  # 8 prompts x (csv + pgm)
