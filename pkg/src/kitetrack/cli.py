"""Command-line entry point: ``python -m kitetrack <command>``.

Exit codes: 0 success, 1 run aborted, 2 self-test failure, 3 configuration error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import RunConfig
from .errors import ConfigError

EXIT_OK, EXIT_ABORT, EXIT_SELFTEST, EXIT_CONFIG = 0, 1, 2, 3


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--no-noise", action="store_true", help="disable sensor noise")
    common.add_argument("--no-turbulence", action="store_true", help="disable turbulence")
    common.add_argument("--synthetic-truth", action="store_true",
                        help="generate the steering force from a known spline network")
    common.add_argument("--duration", type=float, metavar="S", help="simulated time in seconds")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")

    parser = argparse.ArgumentParser(prog="kitetrack", description="Adaptive kite trajectory tracking simulations.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="fly one closed-loop simulation")
    p = sub.add_parser("sweep", parents=[common], help="turbulence sweep of the mean tracking error")
    p.add_argument("--sigmas", type=_float_list, default=None, help="turbulence intensities, m/s")
    p.add_argument("--deltas", type=_float_list, default=None, help="correlation rates, 1/s")
    p.add_argument("--seeds", type=int, default=10, help="seeds per cell")
    p.add_argument("--full", action="store_true", help="100 seeds per cell")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p = sub.add_parser("noise", parents=[common], help="weight drift under sensor noise")
    p.add_argument("--scale", type=float, default=1.0, help="multiplier on the configured noise levels")
    p = sub.add_parser("selftest", help="run the oracle suites")
    p.add_argument("--mutate-liouville", action="store_true", help="negative control: flip a sign")
    p = sub.add_parser("plot", help="write SVG plots for a run directory")
    p.add_argument("run_dir", type=Path)
    sub.add_parser("reference", parents=[common], help="export the reference trajectory")
    return parser


def load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    if args.set:
        cfg = RunConfig.from_text("\n".join(args.set), base=cfg)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["output_dir"] = str(args.out)
    if args.no_noise:
        changes["noise_enabled"] = False
    if args.no_turbulence:
        changes["turbulence_sigma_m_s"] = 0.0
    if args.synthetic_truth:
        changes["synthetic_truth"] = True
    if args.duration is not None:
        changes["duration_s"] = args.duration
    try:
        return cfg.replace(**changes)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_run(cfg: RunConfig) -> int:
    from .experiment import run_single, write_run

    result = run_single(cfg)
    out = write_run(result, cfg.output_dir)
    m = result.metrics
    print(f"J = {m.J:.6g}  max|e| = {m.max_abs_e:.4g}  cycles = {m.cycle_count:.2f}  -> {out}")
    if m.aborted:
        print(f"run aborted: {m.abort_reason}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def _cmd_sweep(cfg: RunConfig, args) -> int:
    from .experiment import SWEEP_DELTAS, SWEEP_SIGMAS, run_sweep, write_sweep

    n_seeds = 100 if args.full else args.seeds
    result = run_sweep(cfg, args.sigmas or SWEEP_SIGMAS, args.deltas or SWEEP_DELTAS, n_seeds, args.workers)
    out = write_sweep(result, cfg.output_dir)
    print(f"baseline J = {result.baseline_J:.6g}")
    for sigma, delta, mean, std, done, aborted in result.table():
        print(f"sigma = {sigma:<5g} delta = {delta:<5g} J = {mean:.6g} +- {std:.2g} ({done} ok, {aborted} aborted)")
    print(f"-> {out}")
    return EXIT_ABORT if result.aborted_runs else EXIT_OK


def _cmd_noise(cfg: RunConfig, args) -> int:
    from .experiment import run_noise_study, write_noise_study

    duration = args.duration if args.duration is not None else 120.0
    result = run_noise_study(cfg, args.scale, duration)
    out = write_noise_study(result, cfg.output_dir)
    print(f"max |slope| of the y-axis weights over the last half: {result.max_abs_slope:.3g} per s -> {out}")
    if result.run.aborted:
        print(f"run aborted: {result.run.metrics.abort_reason}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


def _cmd_selftest(args) -> int:
    from .oracles import format_report, run_selftest

    results = run_selftest(mutate_liouville=args.mutate_liouville)
    print(format_report(results))
    return EXIT_OK if all(r.passed for r in results) else EXIT_SELFTEST


def _cmd_plot(args) -> int:
    from .plots import MissingColumnsError, emit_plots

    try:
        for path in emit_plots(args.run_dir):
            print(path)
    except (FileNotFoundError, MissingColumnsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def _cmd_reference(cfg: RunConfig) -> int:
    from .experiment import write_table
    from .plots import reference_plot

    ref = cfg.reference()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = ref.table()
    write_table(out / "reference.csv", ("s_c", "v", "w", "theta"), table)
    (out / "reference.svg").write_text(reference_plot(table))
    print(f"closure defect {ref.closure_defect:.3g} -> {out}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return _cmd_selftest(args)
        if args.command == "plot":
            return _cmd_plot(args)
        cfg = load_config(args)
        if args.command == "run":
            return _cmd_run(cfg)
        if args.command == "sweep":
            return _cmd_sweep(cfg, args)
        if args.command == "noise":
            return _cmd_noise(cfg, args)
        return _cmd_reference(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
