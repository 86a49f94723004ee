"""Command-line entry point: ``qafusion {unwrap,simulate,montecarlo,hist}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, seeding
from .config import ConfigError, config_to_text, load_config, parse_config
from .fusion import fuse
from .harness import (
    AggregateStats,
    error_summary,
    run_monte_carlo,
    single_shot_histogram,
    write_outputs,
)
from .navsim import Mode, run_scenario
from .sensor_models import NoiseMode

log = logging.getLogger("qafusion")


def _config(args):
    if args.config:
        return load_config(args.config)
    return parse_config("")


def _manifest(cfg, command: str, **extra) -> dict:
    return {"version": __version__, "command": command, "config_text": config_to_text(cfg), **extra}


def _modes(text: str | None, default: Mode) -> list[Mode]:
    if not text:
        return [default]
    if text.strip().lower() == "all":
        return list(Mode)
    return [Mode.parse(m) for m in text.split(",")]


def cmd_unwrap(args) -> int:
    cfg = _config(args).scenario
    rng = seeding.stream(args.seed, seeding.QUANTUM)
    result = fuse(cfg.quantum, cfg.fusion, args.signal, args.classical, rng)
    print(f"a_f = {result.a_f!r}")
    print(f"a_out = {result.a_out!r}")
    print(f"sign = {result.branch.sign:+d}")
    print(f"winding = {result.branch.winding}")
    print(f"residual = {result.residual!r}")
    print(f"converged = {str(result.converged).lower()}")
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    scenario = cfg.scenario
    if args.mode:
        scenario = replace(scenario, mode=Mode.parse(args.mode))
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    cfg = replace(cfg, scenario=scenario, n_runs=1)
    series = run_scenario(scenario)
    stats = AggregateStats(
        mode=scenario.mode.value, n_runs=1, t=series.t,
        mean_accel_err=series.accel_err, rmse_accel=np.abs(series.accel_err),
        std_accel=np.zeros(len(series)), mean_pos_err=series.pos_err,
        rmse_pos=np.abs(series.pos_err), std_pos=np.zeros(len(series)),
        run_seeds=[scenario.seed],
    )
    out = Path(args.out or cfg.output_directory)
    write_outputs(out, [stats], [series], _manifest(cfg, "simulate", seed=scenario.seed))
    print(
        f"{scenario.mode.value}: final position error {series.pos_err[-1]:.6g} m, "
        f"convergence failures {series.convergence_failures}; wrote {out}"
    )
    return 0


def cmd_montecarlo(args) -> int:
    cfg = _config(args)
    if args.runs is not None:
        cfg = replace(cfg, n_runs=args.runs)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    modes = _modes(args.mode, cfg.scenario.mode)
    all_stats = []
    for mode in modes:
        mode_cfg = replace(cfg, scenario=replace(cfg.scenario, mode=mode))
        log.info("running %d %s runs", cfg.n_runs, mode.value)
        stats = run_monte_carlo(mode_cfg, workers=args.workers)
        all_stats.append(stats)
        print(
            f"{mode.value}: final |pos err| mean {np.mean(np.abs(stats.final_pos_err)):.6g} m, "
            f"convergence failure rate {stats.convergence_failure_rate:.3g}"
        )
    series = []
    for k in range(min(args.save_runs, cfg.n_runs)):
        for mode in modes:
            series.append(run_scenario(replace(cfg.scenario, mode=mode, seed=all_stats[0].run_seeds[k])))
    out = Path(args.out or cfg.output_directory)
    manifest = _manifest(
        cfg, "montecarlo", modes=[m.value for m in modes], run_seeds=all_stats[0].run_seeds,
        saved_runs=[{"run": k, "mode": m.value} for k in range(min(args.save_runs, cfg.n_runs)) for m in modes],
    )
    write_outputs(out, all_stats, series, manifest)
    print(f"wrote {out}")
    return 0


def cmd_hist(args) -> int:
    cfg = _config(args)
    if args.runs is not None:
        cfg = replace(cfg, n_runs=args.runs)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    lo, hi = cfg.acceleration_draw or (None, None)
    lo = args.range_min if args.range_min is not None else lo
    hi = args.range_max if args.range_max is not None else hi
    if lo is None or hi is None:
        raise ConfigError("hist needs an acceleration range (--range-min/--range-max or config)")
    cfg = replace(cfg, acceleration_draw=(lo, hi))
    if args.noise_mode and args.noise_mode.lower() != "all":
        modes = [NoiseMode.parse(m) for m in args.noise_mode.split(",")]
    else:
        modes = list(NoiseMode)
    all_stats = []
    for mode in modes:
        stats = single_shot_histogram(cfg, mode)
        all_stats.append(stats)
        s = error_summary(stats.errors)
        print(
            f"{mode.value}: mean {s['mean']:.4g}, std {s['std']:.4g}, "
            f"excess kurtosis {s['excess_kurtosis']:.4g} (m/s^2, n={s['n']})"
        )
    out = Path(args.out or cfg.output_directory)
    write_outputs(out, all_stats, (), _manifest(cfg, "hist", noise_modes=[m.value for m in modes]))
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qafusion", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    u = sub.add_parser("unwrap", help="unwrap one fringe reading against a classical value")
    u.add_argument("--signal", type=float, required=True, help="fringe signal S (atom counts)")
    u.add_argument("--classical", type=float, required=True, help="classical acceleration, m/s^2")
    u.add_argument("--config")
    u.add_argument("--seed", type=int, default=0, help="seed for the fusion noise draw")
    u.set_defaults(func=cmd_unwrap)

    s = sub.add_parser("simulate", help="one navigation run, full time series")
    s.add_argument("--config")
    s.add_argument("--mode", help="classical, fused or fused-q2")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    m = sub.add_parser("montecarlo", help="aggregate error curves over many runs")
    m.add_argument("--config")
    m.add_argument("--runs", type=int)
    m.add_argument("--seed", type=int, help="master seed")
    m.add_argument("--out")
    m.add_argument("--mode", help="mode, comma list, or 'all'")
    m.add_argument("--workers", type=int, default=1)
    m.add_argument("--save-runs", type=int, default=0, help="also write the first K run time series")
    m.set_defaults(func=cmd_montecarlo)

    h = sub.add_parser("hist", help="single-epoch fusion error histogram")
    h.add_argument("--config")
    h.add_argument("--runs", type=int)
    h.add_argument("--seed", type=int, help="master seed")
    h.add_argument("--range-min", type=float)
    h.add_argument("--range-max", type=float)
    h.add_argument("--noise-mode", help="none, acceleration, signal, comma list, or 'all'")
    h.add_argument("--out")
    h.set_defaults(func=cmd_hist)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError, RuntimeError) as exc:
        print(f"qafusion: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
