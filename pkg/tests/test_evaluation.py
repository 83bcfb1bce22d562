import numpy as np
import pytest

import _oracles
from wdsig import evaluation
from wdsig.evaluation import (
    LabeledScore,
    auroc,
    compute_features,
    detector_score,
    evaluate_grid,
    heatmap_csv,
    heatmap_pgm,
    make_labels,
    report_rows,
    sweep,
    synth_dataset,
)
from wdsig.records import PromptRecord, ResponseSample
from wdsig.signals import SignalConfig


def _labeled(scores, labels):
    return [LabeledScore(f"p{i}", s, l) for i, (s, l) in enumerate(zip(scores, labels))]


def _record(prompt_id, texts, reference=None, label=None, embeddings=None):
    responses = [
        ResponseSample(
            f"r{i}",
            t,
            embedding=(
                np.ones((2, 3), dtype=np.float32)
                if embeddings is None
                else np.asarray(embeddings[i], np.float32)
            ),
        )
        for i, t in enumerate(texts)
    ]
    return PromptRecord(prompt_id, "q", responses, reference=reference, label=label)


def test_make_labels_basic():
    records = [
        _record("match", ["Paris", "x"], reference="Paris"),
        _record("miss", ["entirely different words", "x"], reference="Paris"),
    ]
    assert make_labels(records) == [0, 1]


def test_make_labels_boundary_half_is_faithful():
    # rouge_l("a b", "a c") = 0.5 exactly; >= comparator labels it faithful
    records = [_record("edge", ["a b", "x"], reference="a c")]
    assert make_labels(records) == [0]


def test_make_labels_passthrough_and_exclusion():
    records = [
        _record("has-label", ["x", "y"], reference="whatever", label=1),
        _record("nothing", ["x", "y"]),
    ]
    with pytest.warns(UserWarning, match="nothing"):
        labels = make_labels(records)
    assert labels == [1, None]


def test_make_labels_threshold_monotone():
    records = [
        _record(f"p{i}", [t, "x"], reference="the quick brown fox")
        for i, t in enumerate(["the quick brown fox", "the quick brown cat", "dog"])
    ]
    previous = None
    for threshold in (0.0, 0.25, 0.5, 0.75, 1.0):
        labels = make_labels(records, threshold)
        if previous is not None:
            for before, after in zip(previous, labels):
                assert after >= before  # raising threshold never flips 1 -> 0
        previous = labels


def test_auroc_examples():
    assert auroc(_labeled([3.0, 2.0, 5.0, 4.0], [0, 0, 1, 1])) == 1.0
    assert auroc(_labeled([1.0, 1.0, 1.0, 1.0], [0, 1, 0, 1])) == 0.5
    assert auroc(_labeled([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])) == pytest.approx(0.75)


def test_auroc_single_class_raises():
    with pytest.raises(ValueError, match="undefined"):
        auroc(_labeled([1.0, 2.0], [0, 0]))


def test_auroc_matches_pair_counting_with_ties():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(2, 30))
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = rng.integers(0, 5, size=n).astype(float)  # heavy ties
        expected = _oracles.auroc_pair_counting(scores, labels)
        assert auroc(_labeled(scores, labels)) == expected


def test_auroc_flip_identity_and_monotone_invariance():
    rng = np.random.default_rng(1)
    scores = rng.normal(size=20)
    labels = rng.integers(0, 2, size=20)
    labels[0], labels[1] = 0, 1
    base = auroc(_labeled(scores, labels))
    flipped = auroc(_labeled(scores, 1 - labels))
    assert base + flipped == pytest.approx(1.0)
    transformed = auroc(_labeled(np.exp(3.0 * scores), labels))
    assert transformed == pytest.approx(base)


def test_synth_dataset_shapes_and_determinism():
    a = synth_dataset(6, 4, separation=5.0, seed=3)
    b = synth_dataset(6, 4, separation=5.0, seed=3)
    assert len(a) == 6
    assert [r.label for r in a] == [0, 1, 0, 1, 0, 1]
    for ra, rb in zip(a, b):
        assert ra.prompt_id == rb.prompt_id
        for sa, sb in zip(ra.responses, rb.responses):
            assert sa.text == sb.text
            assert np.array_equal(sa.embedding, sb.embedding)
            assert 5 <= sa.embedding.shape[0] <= 30
    c = synth_dataset(6, 4, separation=5.0, seed=4)
    assert any(
        not np.array_equal(x.responses[0].embedding, y.responses[0].embedding)
        for x, y in zip(a, c)
    )


def test_synth_null_case_identical_process():
    records = synth_dataset(40, 5, separation=0.0, seed=5)
    reports = sweep(records, [None], [0.1], detectors=("avgwd",))
    assert reports[0].auroc is not None
    assert 0.2 <= reports[0].auroc <= 0.8  # single small seed, loose bounds


def test_sweep_singleton_grid_matches_eval_path():
    records = synth_dataset(10, 5, separation=6.0, seed=6)
    by_sweep = sweep(records, [None], [0.1], detectors=("avgwd", "eigenwd"))
    again = sweep(records, [None], [0.1], detectors=("avgwd", "eigenwd"))
    assert [r.auroc for r in by_sweep] == [r.auroc for r in again]


def test_sweep_k_subsample_uses_leading_block():
    records = synth_dataset(8, 6, separation=6.0, seed=7)
    truncated = [
        PromptRecord(
            rec.prompt_id,
            rec.prompt_text,
            rec.responses[:3],
            rec.reference,
            rec.label,
            rec.metadata,
        )
        for rec in records
    ]
    via_grid = sweep(records, [3], [0.1], detectors=("avgwd",))
    via_truncation = sweep(truncated, [None], [0.1], detectors=("avgwd",))
    assert via_grid[0].auroc == pytest.approx(via_truncation[0].auroc)


def test_sweep_full_k_at_least_as_good_as_two():
    # more responses should not hurt detection: AUROC(K) >= AUROC(2) - 0.05
    # in expectation over seeds, on a separation where detection is imperfect
    deltas = []
    for seed in range(20):
        records = synth_dataset(40, 10, separation=2.0, seed=200 + seed)
        reports = sweep(records, [2, 10], [0.1], detectors=("avgwd",))
        by_k = {r.k: r.auroc for r in reports}
        deltas.append(by_k[10] - by_k[2])
    assert float(np.mean(deltas)) >= -0.05


def test_sweep_infeasible_k_marks_skipped():
    records = synth_dataset(4, 3, separation=6.0, seed=8)
    reports = sweep(records, [5], [0.1], detectors=("avgwd",))
    assert reports[0].auroc is None
    assert reports[0].skipped == 4


def test_empty_support_excluded_from_every_detector():
    records = synth_dataset(6, 4, separation=6.0, seed=9)
    records[0].responses[1].embedding = np.zeros((0, 16), dtype=np.float32)
    labels = make_labels(records)
    features = [compute_features(r, l) for r, l in zip(records, labels)]
    assert features[0].error is not None
    for det in evaluation.DETECTORS:
        if det == "lne":
            continue  # unavailable everywhere on synthetic data
        reports = evaluate_grid(features, [None], [0.1], detectors=(det,))
        assert reports[0].skipped >= 1


def test_detector_score_lne_none_without_logprobs():
    records = synth_dataset(4, 3, separation=6.0, seed=10)
    feats = compute_features(records[0], 0)
    assert detector_score(feats, "lne", 3, SignalConfig()) is None


def test_report_rows_format():
    records = synth_dataset(4, 3, separation=6.0, seed=11)
    rows = report_rows(sweep(records, [3], [0.1], detectors=("avgwd",)))
    assert rows[0] == "detector,dataset,model,K,p,auroc,n_pos,n_neg,skipped"
    fields = rows[1].split(",")
    assert fields[0] == "avgwd"
    assert fields[1] == "synthetic"
    assert fields[3] == "3"


def test_heatmap_csv_roundtrip():
    D = np.array([[0.0, 1.0, 3.0], [1.0, 0.0, 2.0], [3.0, 2.0, 0.0]])
    text = heatmap_csv(D)
    parsed = np.array([[float(x) for x in line.split(",")] for line in text.strip().split("\n")])
    assert np.array_equal(parsed, D)


def test_heatmap_pgm_format():
    D = np.array([[0.0, 1.0, 3.0], [1.0, 0.0, 2.0], [3.0, 2.0, 0.0]])
    raw = heatmap_pgm(D)
    assert raw.startswith(b"P5\n3 3\n255\n")
    pixels = np.frombuffer(raw[len(b"P5\n3 3\n255\n") :], dtype=np.uint8).reshape(3, 3)
    assert pixels[0, 0] == 0  # diagonal maps to zero intensity
    assert pixels[0, 2] == 255  # max distance maps to full intensity
    assert np.array_equal(pixels, pixels.T)


def test_heatmap_pgm_all_zero():
    raw = heatmap_pgm(np.zeros((4, 4)))
    pixels = np.frombuffer(raw[len(b"P5\n4 4\n255\n") :], dtype=np.uint8)
    assert np.all(pixels == 0)


def test_group_labels_fold_temperature_into_dataset():
    records = synth_dataset(4, 3, separation=6.0, seed=12)
    for rec in records:
        rec.metadata["temperature"] = "0.5"
    reports = sweep(records, [None], [0.1], detectors=("avgwd",))
    assert reports[0].dataset == "synthetic@tau=0.5"
