"""Command-line entry point: score, eval, sweep, check, synth, export-heatmap.

Every command writes its outputs plus a run_config.json echoing the exact
configuration into --out. Exit codes: 0 success, 1 usage error, 2 data error,
3 internal solver failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, evaluation, stability
from .ot import SolverError
from .records import BlobFormatError, ManifestError, read_manifest, write_manifest
from .signals import SignalConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; we use 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_common(parser):
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=42, help="projection seed")
    parser.add_argument("--proj-dim", type=int, default=128, help="projection target dim")
    parser.add_argument("--p", type=float, default=0.1, help="quasi-norm order in (0,2)")
    parser.add_argument("--alpha", type=float, default=1e-6, help="kernel diagonal shift")
    parser.add_argument("--epsilon", type=float, default=1e-6, help="bandwidth stabilizer")
    parser.add_argument("--eigen-floor", type=float, default=0.0, help="eigenvalue clamp floor")
    parser.add_argument("--es-reg", type=float, default=1e-3, help="eigenscore regularizer")
    parser.add_argument(
        "--detectors",
        default=",".join(evaluation.DETECTORS),
        help="comma list from: " + ",".join(evaluation.DETECTORS),
    )
    parser.add_argument("--threads", type=int, default=1, help="prompt-level thread hint")


def _signal_config(args) -> SignalConfig:
    return SignalConfig(
        p=args.p, alpha=args.alpha, epsilon=args.epsilon, eigen_floor=args.eigen_floor
    )


def _detector_list(args) -> list[str]:
    names = [d.strip() for d in args.detectors.split(",") if d.strip()]
    unknown = [d for d in names if d not in evaluation.DETECTORS]
    if unknown:
        raise UsageError(f"unknown detectors: {', '.join(unknown)}")
    return names


def _write_config(args, out_dir: Path) -> None:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    config["version"] = __version__
    config["label_basis"] = "responses[0] vs reference, faithful iff rouge_l >= threshold"
    out_dir.mkdir(parents=True, exist_ok=True)
    text = json.dumps(config, sort_keys=True, indent=2, default=str) + "\n"
    (out_dir / "run_config.json").write_text(text, encoding="utf-8")


def _write_lines(path: Path, lines) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _compute_features(records, labels, args):
    jobs = list(zip(records, labels))
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            return list(
                pool.map(
                    lambda job: evaluation.compute_features(
                        job[0], job[1], seed=args.seed, proj_dim=args.proj_dim
                    ),
                    jobs,
                )
            )
    return [
        evaluation.compute_features(rec, lab, seed=args.seed, proj_dim=args.proj_dim)
        for rec, lab in jobs
    ]


def cmd_score(args) -> int:
    records = read_manifest(args.manifest)
    out_dir = Path(args.out)
    _write_config(args, out_dir)
    detectors = _detector_list(args)
    cfg = _signal_config(args)
    features = _compute_features(records, [r.label for r in records], args)
    lines = ["prompt_id,detector,score"]
    skipped: dict[str, str] = {}
    gaps: list[str] = []
    for feats in features:
        if feats.error is not None:
            skipped[feats.prompt_id] = feats.error
            continue
        for det in detectors:
            value = evaluation.detector_score(feats, det, feats.k, cfg, args.es_reg)
            if value is None:
                gaps.append(f"{feats.prompt_id}:{det}")
                continue
            lines.append(f"{feats.prompt_id},{det},{value!r}")
    _write_lines(out_dir / "scores.csv", lines)
    if args.export_heatmaps:
        heat_dir = out_dir / "heatmaps"
        heat_dir.mkdir(exist_ok=True)
        for feats in features:
            if feats.distance is None:
                continue
            (heat_dir / f"{feats.prompt_id}.csv").write_text(
                evaluation.heatmap_csv(feats.distance), encoding="utf-8"
            )
            (heat_dir / f"{feats.prompt_id}.pgm").write_bytes(
                evaluation.heatmap_pgm(feats.distance)
            )
    if gaps:
        print(f"detectors unavailable on some prompts: {' '.join(gaps)}", file=sys.stderr)
    if skipped:
        for pid, reason in skipped.items():
            print(f"skipped {pid}: {reason}", file=sys.stderr)
        print(f"scored {len(features) - len(skipped)}/{len(features)} prompts", file=sys.stderr)
        if args.strict:
            return EXIT_DATA
    return EXIT_OK


def cmd_eval(args) -> int:
    records = read_manifest(args.manifest)
    out_dir = Path(args.out)
    _write_config(args, out_dir)
    labels = evaluation.make_labels(records, args.label_threshold)
    features = _compute_features(records, labels, args)
    reports = evaluation.evaluate_grid(
        features, [None], [args.p], _signal_config(args), _detector_list(args), args.es_reg
    )
    _write_lines(out_dir / "eval.csv", evaluation.report_rows(reports))
    return EXIT_OK


def cmd_sweep(args) -> int:
    records = read_manifest(args.manifest)
    out_dir = Path(args.out)
    _write_config(args, out_dir)
    k_grid = [int(x) for x in args.k_grid.split(",") if x.strip()]
    p_grid = [float(x) for x in args.p_grid.split(",") if x.strip()]
    if not k_grid or not p_grid:
        raise UsageError("empty sweep grid")
    labels = evaluation.make_labels(records, args.label_threshold)
    features = _compute_features(records, labels, args)
    reports = evaluation.evaluate_grid(
        features, k_grid, p_grid, _signal_config(args), _detector_list(args), args.es_reg
    )
    _write_lines(out_dir / "sweep.csv", evaluation.report_rows(reports))
    return EXIT_OK


def cmd_check(args) -> int:
    out_dir = Path(args.out)
    _write_config(args, out_dir)
    reports = stability.run_all_checks(
        trials=args.trials,
        seed=args.seed,
        noise_scale=args.noise_scale,
        fixed_bandwidth=args.fixed_bandwidth,
    )
    lines = ["check,trials,violations,max_slack"]
    failures = 0
    for name, rep in reports.items():
        lines.append(f"{name},{rep.trial_count},{rep.violations},{rep.max_slack!r}")
        status = "ok" if rep.violations == 0 else "VIOLATED"
        print(f"{name}: trials={rep.trial_count} violations={rep.violations} {status}")
        failures += rep.violations
    _write_lines(out_dir / "checks.csv", lines)
    return EXIT_SOLVER if failures else EXIT_OK


def cmd_synth(args) -> int:
    out_dir = Path(args.out)
    _write_config(args, out_dir)
    records = evaluation.synth_dataset(
        n_prompts=args.n_prompts,
        k=args.k,
        separation=args.separation,
        seed=args.seed,
        mode_count_halluc=args.modes,
        dim=args.dim,
    )
    write_manifest(records, out_dir / "manifest.jsonl")
    print(f"wrote {len(records)} prompts x {args.k} responses to {out_dir}")
    return EXIT_OK


def cmd_export_heatmap(args) -> int:
    records = read_manifest(args.manifest)
    out_dir = Path(args.out)
    _write_config(args, out_dir)
    matches = [r for r in records if r.prompt_id == args.prompt_id]
    if not matches:
        print(f"unknown prompt_id {args.prompt_id!r}", file=sys.stderr)
        return EXIT_DATA
    feats = evaluation.compute_features(
        matches[0], matches[0].label, seed=args.seed, proj_dim=args.proj_dim
    )
    if feats.distance is None:
        print(f"prompt {args.prompt_id!r} not scorable: {feats.error}", file=sys.stderr)
        return EXIT_DATA
    (out_dir / f"{args.prompt_id}.csv").write_text(
        evaluation.heatmap_csv(feats.distance), encoding="utf-8"
    )
    (out_dir / f"{args.prompt_id}.pgm").write_bytes(evaluation.heatmap_pgm(feats.distance))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="wdsig", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", parents=[], help="score every prompt in a manifest")
    p_score.add_argument("--manifest", required=True)
    _add_common(p_score)
    p_score.add_argument("--strict", action="store_true", help="nonzero exit if any prompt skipped")
    p_score.add_argument("--export-heatmaps", action="store_true")
    p_score.set_defaults(func=cmd_score)

    p_eval = sub.add_parser("eval", help="AUROC per detector per dataset partition")
    p_eval.add_argument("--manifest", required=True)
    _add_common(p_eval)
    p_eval.add_argument("--label-threshold", type=float, default=0.5)
    p_eval.set_defaults(func=cmd_eval)

    p_sweep = sub.add_parser("sweep", help="ablation sweep over K and p grids")
    p_sweep.add_argument("--manifest", required=True)
    _add_common(p_sweep)
    p_sweep.add_argument("--label-threshold", type=float, default=0.5)
    p_sweep.add_argument("--k-grid", default="10", help="comma list of K subsamples")
    p_sweep.add_argument("--p-grid", default="0.1", help="comma list of p values")
    p_sweep.set_defaults(func=cmd_sweep)

    p_check = sub.add_parser("check", help="run the robustness-bound verification suite")
    p_check.add_argument("--out", required=True)
    p_check.add_argument("--trials", type=int, default=1000)
    p_check.add_argument("--seed", type=int, default=0)
    p_check.add_argument("--noise-scale", type=float, default=0.1)
    p_check.add_argument("--fixed-bandwidth", type=float, default=1.0)
    p_check.set_defaults(func=cmd_check)

    p_synth = sub.add_parser("synth", help="generate a synthetic manifest with labels")
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--n-prompts", type=int, default=200)
    p_synth.add_argument("--k", type=int, default=10)
    p_synth.add_argument("--separation", type=float, default=10.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--modes", type=int, default=3)
    p_synth.add_argument("--dim", type=int, default=16)
    p_synth.set_defaults(func=cmd_synth)

    p_heat = sub.add_parser("export-heatmap", help="distance matrix of one prompt as CSV + PGM")
    p_heat.add_argument("--manifest", required=True)
    p_heat.add_argument("--prompt-id", required=True)
    _add_common(p_heat)
    p_heat.set_defaults(func=cmd_export_heatmap)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ManifestError, BlobFormatError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
