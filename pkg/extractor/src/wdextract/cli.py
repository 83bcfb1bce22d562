"""CLI: extract (white-box sampling) and extract-teacher (black-box texts).

The prompts file is JSONL ({"prompt_id", "prompt_text", "reference", "label"})
or plain text with one prompt per line. The responses file for teacher mode is
JSONL with an additional "responses": [text, ...] field per line.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ExtractorConfig
from .extract import PromptSpec, TeacherItem, sample_and_extract, teacher_force


def _read_prompts(path: str) -> list[PromptSpec]:
    specs = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            obj = None
        if isinstance(obj, dict):
            specs.append(
                PromptSpec(
                    prompt_id=str(obj.get("prompt_id", f"p{i:05d}")),
                    prompt_text=str(obj["prompt_text"]),
                    reference=obj.get("reference"),
                    label=obj.get("label"),
                )
            )
        else:
            specs.append(PromptSpec(prompt_id=f"p{i:05d}", prompt_text=line))
    return specs


def _read_teacher_items(path: str) -> list[TeacherItem]:
    items = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        obj = json.loads(line)
        items.append(
            TeacherItem(
                prompt_id=str(obj.get("prompt_id", f"p{i:05d}")),
                prompt_text=str(obj["prompt_text"]),
                responses=[str(t) for t in obj["responses"]],
                reference=obj.get("reference"),
                label=obj.get("label"),
            )
        )
    return items


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wdextract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="sample K responses per prompt and extract states")
    p_extract.add_argument("--model", required=True)
    p_extract.add_argument("--prompts-file", required=True)
    p_extract.add_argument("--out", required=True)
    p_extract.add_argument("--k", type=int, default=10)
    p_extract.add_argument("--temperature", type=float, default=0.5)
    p_extract.add_argument("--top-k", type=int, default=None)
    p_extract.add_argument("--top-p", type=float, default=None)
    p_extract.add_argument("--max-new-tokens", type=int, default=64)
    p_extract.add_argument("--seed", type=int, default=0)

    p_teacher = sub.add_parser(
        "extract-teacher", help="teacher-force black-box response texts through a teacher"
    )
    p_teacher.add_argument("--model", default="black-box", help="black-box model identifier")
    p_teacher.add_argument("--teacher-model", required=True)
    p_teacher.add_argument("--responses-file", required=True)
    p_teacher.add_argument("--out", required=True)
    p_teacher.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract":
            cfg = ExtractorConfig(
                model=args.model,
                k=args.k,
                temperature=args.temperature,
                top_k=args.top_k,
                top_p=args.top_p,
                max_new_tokens=args.max_new_tokens,
                seed=args.seed,
            )
            manifest = sample_and_extract(_read_prompts(args.prompts_file), cfg, args.out)
        else:
            cfg = ExtractorConfig(
                model=args.model, teacher_model=args.teacher_model, seed=args.seed
            )
            manifest = teacher_force(_read_teacher_items(args.responses_file), cfg, args.out)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
