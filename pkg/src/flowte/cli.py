"""Command-line entry point.

Subcommands: `run` (policy comparison over load scales), `sweep-threshold`,
`motivating` (3-node example), `weights` (min-MLU LP only), `paths` (k
shortest paths only). Flags mirror the experiment config; a `--config`
key-value file supplies defaults that explicit flags override.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields

from .experiment import (
    ExperimentConfig,
    emit_report,
    load_base_matrix,
    load_experiment_topology,
    parse_config_file,
    run_comparison,
    run_motivating_example,
    run_threshold_sweep,
)
from .kpaths import build_pathsets, format_pathset, yen_k_shortest
from .minmlu import compute_min_mlu_weights, scale_demands, write_weights_csv


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key-value config file; flags override it")
    parser.add_argument("--topology", help="'abilene' or a topology CSV path")
    parser.add_argument("--traffic", help="'builtin' or a traffic matrix CSV path")
    parser.add_argument("--dist", choices=["pareto", "bimodal", "deterministic"])
    parser.add_argument("--mean-size", type=float, dest="mean_size", help="mean content size, bytes")
    parser.add_argument("--k", type=int, help="candidate paths per demand pair")
    parser.add_argument("--scale", dest="scales", help="comma-separated demand scale factors")
    parser.add_argument("--threshold", dest="thresholds", help="comma-separated thresholds, bytes (inf allowed)")
    parser.add_argument("--horizon", type=float, help="arrival horizon, seconds")
    parser.add_argument("--warmup", type=float, help="warm-up exclusion window, seconds")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--reps", type=int, help="replications per cell")
    parser.add_argument("--out", help="output directory for result CSVs")
    parser.add_argument("--view", dest="view_mode", choices=["exact", "counter"])
    parser.add_argument("--policies", help="comma-separated policy list (mbp,wr)")


def _collect_config(args) -> ExperimentConfig:
    overrides = {}
    if getattr(args, "config", None):
        overrides.update(parse_config_file(args.config))
    names = {f.name for f in fields(ExperimentConfig)}
    for name in names:
        value = getattr(args, name, None)
        if value is None:
            continue
        if name in ("scales", "thresholds"):
            value = tuple(float(v) for v in value.split(",") if v.strip())
        elif name == "policies":
            value = tuple(p.strip() for p in value.split(",") if p.strip())
        overrides[name] = value
    return ExperimentConfig(**overrides)


def _cmd_run(args) -> int:
    config = _collect_config(args)
    report = run_comparison(config)
    _finish(report, config.out)
    return 0


def _cmd_sweep(args) -> int:
    config = _collect_config(args)
    if not config.thresholds:
        raise ValueError("sweep-threshold requires --threshold")
    if len(config.scales) != 1:
        config = ExperimentConfig(**{**_as_dict(config), "scales": (config.scales[0],)})
    report = run_threshold_sweep(config)
    _finish(report, config.out)
    return 0


def _as_dict(config: ExperimentConfig) -> dict:
    return {f.name: getattr(config, f.name) for f in fields(config)}


def _cmd_motivating(args) -> int:
    seed = args.seed if args.seed is not None else 1
    report = run_motivating_example(seed=seed)
    _finish(report, args.out)
    return 0


def _cmd_weights(args) -> int:
    config = _collect_config(args)
    topology = load_experiment_topology(config)
    base = load_base_matrix(config, topology)
    pairs = [pair for pair, d in base if d.offered_load > 0]
    pathsets = build_pathsets(topology, pairs, config.k)
    for scale in config.scales:
        result = compute_min_mlu_weights(topology, scale_demands(base, scale), pathsets)
        flag = "" if result.feasible else " INFEASIBLE (t > 1)"
        print(f"scale {scale:g}: mlu = {result.mlu:.6f}{flag}")
        if config.out:
            import os

            os.makedirs(config.out, exist_ok=True)
            path = os.path.join(config.out, f"weights_scale_{scale:g}.csv")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                write_weights_csv(result.weights, fh)
            print(f"wrote {path}")
    return 0


def _cmd_paths(args) -> int:
    config = _collect_config(args)
    topology = load_experiment_topology(config)
    if args.src and args.dst:
        pathset = yen_k_shortest(topology, args.src, args.dst, config.k)
        sys.stdout.write(f"# {args.src} -> {args.dst}\n")
        sys.stdout.write(format_pathset(pathset) or "(unreachable)\n")
        return 0
    base = load_base_matrix(config, topology)
    pairs = [pair for pair, d in base if d.offered_load > 0]
    for (src, dst), pathset in sorted(build_pathsets(topology, pairs, config.k).items()):
        sys.stdout.write(f"# {src} -> {dst}\n")
        sys.stdout.write(format_pathset(pathset))
    return 0


def _finish(report, out_dir) -> None:
    if out_dir:
        for path in emit_report(report, out_dir):
            print(f"wrote {path}")
    else:
        for scale in sorted(report.lp_mlu):
            lp = report.lp_mlu[scale]
            flag = "" if lp.feasible else " INFEASIBLE"
            print(f"scale {scale:g}: lp_mlu = {lp.mlu:.4f}{flag}")
        for cell in report.cells:
            print(
                f"scale {cell.scale:g} {cell.policy} rep {cell.replication}: "
                f"mean response {cell.mean_response_s:.6g} s over {cell.flows} flows "
                f"(peak mlu {cell.peak_mlu:.3f})"
            )
        for gain in report.gains:
            print(f"scale {gain.scale:g}: response-time reduction gain {gain.gain:.4f}")
        for row in report.thresholds:
            print(
                f"threshold {row.threshold_bytes:g} B: gain {row.gain:.4f}, "
                f"allocation frequency {row.allocation_frequency:.4f}"
            )
        for ck in report.checkpoints:
            print(
                f"{ck.policy} at {ck.delivered} delivered: mean response {ck.mean_response_s:.6g} s"
            )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowte",
        description="Flow-level traffic engineering simulator: backlog-aware vs min-MLU random splitting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="policy comparison across load scales")
    _add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep-threshold", help="thresholded allocation sweep at one scale")
    _add_common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_moti = sub.add_parser("motivating", help="3-node motivating example")
    p_moti.add_argument("--seed", type=int)
    p_moti.add_argument("--out")
    p_moti.set_defaults(func=_cmd_motivating)

    p_weights = sub.add_parser("weights", help="solve the min-MLU LP only")
    _add_common(p_weights)
    p_weights.set_defaults(func=_cmd_weights)

    p_paths = sub.add_parser("paths", help="k shortest paths only")
    _add_common(p_paths)
    p_paths.add_argument("--src")
    p_paths.add_argument("--dst")
    p_paths.set_defaults(func=_cmd_paths)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
