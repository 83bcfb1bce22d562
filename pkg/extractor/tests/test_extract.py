import numpy as np
import pytest

from wdextract import (
    ExtractorConfig,
    PromptSpec,
    TeacherItem,
    mid_layer_index,
    sample_and_extract,
    teacher_force,
)

PROMPTS = [
    PromptSpec("q0", "the cat sat on the mat", reference="the mat", label=0),
    PromptSpec("q1", "a big red dog ran", reference=None, label=1),
]


def _config(**overrides):
    base = dict(model="tiny-demo", k=3, temperature=0.8, max_new_tokens=12, seed=7)
    base.update(overrides)
    return ExtractorConfig(**base)


def _read_tree(root):
    return {
        p.relative_to(root).as_posix(): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def test_mid_layer_rule(tiny_model):
    assert mid_layer_index(tiny_model) == 2  # floor(4 / 2)


def test_manifest_shape_and_logprobs(tmp_path, tiny_model, tiny_tokenizer):
    manifest = sample_and_extract(
        PROMPTS, _config(), tmp_path, model=tiny_model, tokenizer=tiny_tokenizer
    )
    import wdsig

    records = wdsig.read_manifest(manifest)
    assert [r.prompt_id for r in records] == ["q0", "q1"]
    assert records[0].reference == "the mat"
    assert records[0].label == 0
    for rec in records:
        assert rec.k == 3
        assert rec.metadata["layer_index"] == "2"
        assert rec.metadata["model"] == "tiny-demo"
        for sample in rec.responses:
            emb = sample.embedding_matrix()
            assert emb.dtype == np.float32
            assert emb.shape[1] == 32
            assert len(sample.token_logprobs) == emb.shape[0]
            assert all(lp <= 0.0 for lp in sample.token_logprobs)


def test_eos_terminates_and_is_excluded(tmp_path, tiny_model, tiny_tokenizer):
    cfg = _config(max_new_tokens=12)
    manifest = sample_and_extract(
        PROMPTS, cfg, tmp_path, model=tiny_model, tokenizer=tiny_tokenizer
    )
    import wdsig

    records = wdsig.read_manifest(manifest)
    lengths = [
        s.embedding_matrix().shape[0] for rec in records for s in rec.responses
    ]
    assert any(m < cfg.max_new_tokens for m in lengths)  # some response hit EOS
    for rec in records:
        for sample in rec.responses:
            assert "<eos>" not in sample.text
            # text round-trips to exactly m tokens under the word-level tokenizer
            ids = tiny_tokenizer.encode(sample.text, add_special_tokens=False)
            assert len(ids) == sample.embedding_matrix().shape[0]


def test_fixed_seed_rerun_byte_identical(tmp_path, tiny_model, tiny_tokenizer):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        sample_and_extract(PROMPTS, _config(), out, model=tiny_model, tokenizer=tiny_tokenizer)
    assert _read_tree(a) == _read_tree(b)


def test_seed_changes_output(tmp_path, tiny_model, tiny_tokenizer):
    a, b = tmp_path / "a", tmp_path / "b"
    sample_and_extract(PROMPTS, _config(seed=7), a, model=tiny_model, tokenizer=tiny_tokenizer)
    sample_and_extract(PROMPTS, _config(seed=8), b, model=tiny_model, tokenizer=tiny_tokenizer)
    assert _read_tree(a) != _read_tree(b)


def test_top_k_one_is_greedy(tmp_path, tiny_model, tiny_tokenizer):
    manifest = sample_and_extract(
        PROMPTS, _config(top_k=1), tmp_path, model=tiny_model, tokenizer=tiny_tokenizer
    )
    import wdsig

    for rec in wdsig.read_manifest(manifest):
        texts = {s.text for s in rec.responses}
        assert len(texts) == 1  # all samples collapse to the greedy continuation


def test_teacher_force_reproduces_own_samples_bitwise(tmp_path, tiny_model, tiny_tokenizer):
    sampled_dir = tmp_path / "sampled"
    manifest = sample_and_extract(
        PROMPTS, _config(), sampled_dir, model=tiny_model, tokenizer=tiny_tokenizer
    )
    import wdsig

    records = wdsig.read_manifest(manifest)
    items = [
        TeacherItem(rec.prompt_id, rec.prompt_text, [s.text for s in rec.responses])
        for rec in records
    ]
    forced_dir = tmp_path / "forced"
    cfg = ExtractorConfig(model="black-box", teacher_model="tiny-demo", seed=7)
    forced_manifest = teacher_force(
        items, cfg, forced_dir, model=tiny_model, tokenizer=tiny_tokenizer
    )
    forced = wdsig.read_manifest(forced_manifest)
    for rec, frec in zip(records, forced):
        for sample, fsample in zip(rec.responses, frec.responses):
            a = (sampled_dir / f"blobs/{rec.prompt_id}__{sample.response_id}.wdem").read_bytes()
            b = (forced_dir / f"blobs/{frec.prompt_id}__{fsample.response_id}.wdem").read_bytes()
            assert a == b  # identical token ids -> bit-identical states
            assert fsample.token_logprobs is None
        assert frec.metadata["teacher_model"] == "tiny-demo"
        assert frec.metadata["extraction"] == "teacher-forced"


def test_teacher_force_distinct_texts_distinct_blobs(tmp_path, tiny_model, tiny_tokenizer):
    items = [TeacherItem("p0", "the cat", ["sat on the mat", "ran and ran fast"])]
    cfg = ExtractorConfig(model="bb", teacher_model="tiny-demo")
    teacher_force(items, cfg, tmp_path, model=tiny_model, tokenizer=tiny_tokenizer)
    a = (tmp_path / "blobs/p0__r0.wdem").read_bytes()
    b = (tmp_path / "blobs/p0__r1.wdem").read_bytes()
    assert a != b


def test_teacher_force_empty_text_flagged(tmp_path, tiny_model, tiny_tokenizer):
    items = [TeacherItem("p0", "the cat", ["", "sat on the mat"])]
    cfg = ExtractorConfig(model="bb", teacher_model="tiny-demo")
    manifest = teacher_force(items, cfg, tmp_path, model=tiny_model, tokenizer=tiny_tokenizer)
    import wdsig

    rec = wdsig.read_manifest(manifest)[0]
    assert rec.responses[0].embedding_matrix().shape == (0, 32)
    assert rec.metadata["empty_responses"] == "r0"


def test_config_validation():
    with pytest.raises(ValueError):
        ExtractorConfig(model="m", k=1)
    with pytest.raises(ValueError):
        ExtractorConfig(model="m", temperature=0.0)
    with pytest.raises(ValueError):
        ExtractorConfig(model="m", top_p=0.0)
    with pytest.raises(ValueError):
        teacher_force([], ExtractorConfig(model="m"), "/tmp/unused")


def test_empty_prompt_rejected(tmp_path, tiny_model, tiny_tokenizer):
    with pytest.raises(ValueError, match="zero tokens"):
        sample_and_extract(
            [PromptSpec("p0", "")], _config(), tmp_path,
            model=tiny_model, tokenizer=tiny_tokenizer,
        )
