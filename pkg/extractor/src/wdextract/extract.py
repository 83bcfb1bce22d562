"""Sampling and hidden-state extraction from causal language models.

sample_and_extract draws K responses per prompt by temperature sampling (with
optional top-k / top-p truncation), recording each sampled token's
log-probability under the pre-truncation temperature-scaled distribution.
Hidden states are then taken from one full forward pass over
[prompt, generated tokens] at the middle transformer block, for the generated
continuation positions only (the terminating EOS is never part of the
support). teacher_force runs the same forward-pass extraction over response
texts that came from elsewhere, e.g. a black-box model, after tokenizing them
with the accessible teacher.

Both operations share the forward-pass helper, so teacher-forcing a model's
own sampled token ids reproduces its sample_and_extract embeddings bit for
bit.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .config import ExtractorConfig
from .writer import manifest_line, response_entry, write_embedding_blob, write_manifest_file


@dataclass
class PromptSpec:
    prompt_id: str
    prompt_text: str
    reference: str | None = None
    label: int | None = None


@dataclass
class TeacherItem:
    """One prompt with the black-box model's sampled response texts."""

    prompt_id: str
    prompt_text: str
    responses: list[str]
    reference: str | None = None
    label: int | None = None


def load_model_and_tokenizer(name_or_path: str):
    from transformers import AutoModelForCausalLM, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(name_or_path)
    model = AutoModelForCausalLM.from_pretrained(name_or_path)
    model.eval()
    return model, tokenizer


def mid_layer_index(model) -> int:
    """floor(L/2), indexing block outputs (hidden_states[0] is the embedding)."""
    return int(model.config.num_hidden_layers) // 2


def _coerce_prompts(prompts) -> list[PromptSpec]:
    out = []
    for i, item in enumerate(prompts):
        if isinstance(item, PromptSpec):
            out.append(item)
        else:
            out.append(PromptSpec(prompt_id=f"p{i:05d}", prompt_text=str(item)))
    return out


def _encode(tokenizer, text: str) -> list[int]:
    return list(tokenizer.encode(text, add_special_tokens=False))


def _eos_id(model, tokenizer) -> int | None:
    if tokenizer.eos_token_id is not None:
        return int(tokenizer.eos_token_id)
    eos = getattr(model.config, "eos_token_id", None)
    return None if eos is None else int(eos)


@torch.no_grad()
def _hidden_states_for_tokens(model, ids: list[int], start: int, layer: int) -> np.ndarray:
    """Mid-layer states for positions start.. of one full forward over ids."""
    if start >= len(ids):
        width = int(model.config.hidden_size)
        return np.zeros((0, width), dtype=np.float32)
    out = model(torch.tensor([ids], dtype=torch.long), output_hidden_states=True)
    states = out.hidden_states[layer][0, start:, :]
    return states.to(torch.float32).cpu().numpy()


def _truncate(scaled: torch.Tensor, top_k: int | None, top_p: float | None) -> torch.Tensor:
    """Zero out tokens removed by top-k / nucleus truncation; renormalize."""
    probs = torch.softmax(scaled, dim=-1)
    if top_k is not None and top_k < probs.numel():
        kth = torch.topk(probs, top_k).values[-1]
        probs = torch.where(probs >= kth, probs, torch.zeros_like(probs))
    if top_p is not None and top_p < 1.0:
        ordered, order = torch.sort(probs, descending=True)
        keep_sorted = torch.cumsum(ordered, dim=-1) - ordered < top_p
        keep_sorted[0] = True
        keep = torch.zeros_like(keep_sorted)
        keep[order] = keep_sorted
        probs = torch.where(keep, probs, torch.zeros_like(probs))
    return probs / probs.sum()


@torch.no_grad()
def _sample_one(
    model, prompt_ids: list[int], cfg: ExtractorConfig, eos: int | None, generator
) -> tuple[list[int], list[float]]:
    ids = list(prompt_ids)
    tokens: list[int] = []
    logprobs: list[float] = []
    for _ in range(cfg.max_new_tokens):
        logits = model(torch.tensor([ids], dtype=torch.long)).logits[0, -1]
        scaled = logits / cfg.temperature
        pre_truncation = torch.log_softmax(scaled, dim=-1)
        probs = _truncate(scaled, cfg.top_k, cfg.top_p)
        next_id = int(torch.multinomial(probs, 1, generator=generator).item())
        if eos is not None and next_id == eos:
            break
        tokens.append(next_id)
        logprobs.append(float(pre_truncation[next_id].item()))
        ids.append(next_id)
    return tokens, logprobs


def _sample_generator(cfg: ExtractorConfig, prompt_index: int, sample_index: int):
    gen = torch.Generator()
    gen.manual_seed(cfg.seed * 1_000_003 + prompt_index * 1_009 + sample_index)
    return gen


def _base_metadata(cfg: ExtractorConfig, layer: int) -> dict[str, str]:
    meta = {
        "model": cfg.model,
        "temperature": repr(float(cfg.temperature)),
        "layer_index": str(layer),
        "layer_convention": "hidden_states[0]=embeddings; index names a block output",
        "seed": str(cfg.seed),
        "logprob_basis": "pre-truncation temperature-scaled",
    }
    if cfg.top_k is not None:
        meta["top_k"] = str(cfg.top_k)
    if cfg.top_p is not None:
        meta["top_p"] = repr(float(cfg.top_p))
    return meta


def sample_and_extract(prompts, cfg: ExtractorConfig, out_dir, model=None, tokenizer=None) -> Path:
    """Sample K responses per prompt and write the manifest + blobs."""
    if model is None or tokenizer is None:
        model, tokenizer = load_model_and_tokenizer(cfg.model)
    model.eval()
    specs = _coerce_prompts(prompts)
    if not specs:
        raise ValueError("no prompts given")
    out_dir = Path(out_dir)
    layer = mid_layer_index(model)
    eos = _eos_id(model, tokenizer)
    lines = []
    for pi, spec in enumerate(specs):
        prompt_ids = _encode(tokenizer, spec.prompt_text)
        if not prompt_ids:
            raise ValueError(f"prompt {spec.prompt_id!r} tokenizes to zero tokens")
        responses = []
        empty = []
        for r in range(cfg.k):
            response_id = f"r{r}"
            token_ids, logprobs = _sample_one(
                model, prompt_ids, cfg, eos, _sample_generator(cfg, pi, r)
            )
            states = _hidden_states_for_tokens(
                model, prompt_ids + token_ids, len(prompt_ids), layer
            )
            if states.shape[0] == 0:
                empty.append(response_id)
            rel = f"blobs/{spec.prompt_id}__{response_id}.wdem"
            write_embedding_blob(states, out_dir / rel)
            # EOS is already excluded from token_ids; decode everything else
            # verbatim so the text re-encodes to exactly these ids.
            responses.append(
                response_entry(
                    response_id,
                    tokenizer.decode(token_ids, skip_special_tokens=False),
                    rel,
                    logprobs,
                )
            )
        metadata = _base_metadata(cfg, layer)
        if empty:
            metadata["empty_responses"] = ",".join(empty)
            print(
                f"warning: prompt {spec.prompt_id!r} produced empty generations: "
                f"{','.join(empty)}",
                file=sys.stderr,
            )
        lines.append(
            manifest_line(
                spec.prompt_id, spec.prompt_text, responses, spec.reference, spec.label, metadata
            )
        )
    return write_manifest_file(lines, out_dir / "manifest.jsonl")


def teacher_force(items, cfg: ExtractorConfig, out_dir, model=None, tokenizer=None) -> Path:
    """Extract teacher hidden states for externally sampled response texts."""
    if cfg.teacher_model is None:
        raise ValueError("teacher_force needs cfg.teacher_model")
    if model is None or tokenizer is None:
        model, tokenizer = load_model_and_tokenizer(cfg.teacher_model)
    model.eval()
    out_dir = Path(out_dir)
    layer = mid_layer_index(model)
    lines = []
    for item in items:
        prompt_ids = _encode(tokenizer, item.prompt_text)
        if not prompt_ids:
            raise ValueError(f"prompt {item.prompt_id!r} tokenizes to zero tokens")
        responses = []
        empty = []
        for r, text in enumerate(item.responses):
            response_id = f"r{r}"
            token_ids = _encode(tokenizer, text)
            states = _hidden_states_for_tokens(
                model, prompt_ids + token_ids, len(prompt_ids), layer
            )
            if states.shape[0] == 0:
                empty.append(response_id)
            rel = f"blobs/{item.prompt_id}__{response_id}.wdem"
            write_embedding_blob(states, out_dir / rel)
            responses.append(response_entry(response_id, text, rel, None))
        metadata = _base_metadata(cfg, layer)
        metadata["teacher_model"] = cfg.teacher_model
        metadata["extraction"] = "teacher-forced"
        del metadata["logprob_basis"]  # no logprobs in the forced pass
        if empty:
            metadata["empty_responses"] = ",".join(empty)
            print(
                f"warning: prompt {item.prompt_id!r} has empty response texts: "
                f"{','.join(empty)}",
                file=sys.stderr,
            )
        lines.append(
            manifest_line(
                item.prompt_id, item.prompt_text, responses, item.reference, item.label, metadata
            )
        )
    return write_manifest_file(lines, out_dir / "manifest.jsonl")
