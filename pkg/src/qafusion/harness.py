"""Monte-Carlo experiment driver, aggregation and CSV output."""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sps

from . import seeding
from .fusion import unwrap_batch
from .navsim import Mode, RunSeries, ScenarioConfig, run_scenario
from .sensor_models import NoiseMode, quantum_signal_noisy, shot_noise_sigma


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    n_runs: int = 1000
    master_seed: int = 0
    output_directory: str = "results"
    histogram_bins: int = 100
    acceleration_draw: Optional[tuple[float, float]] = None
    time_stride: int = 1
    profile: str = "navigation"

    def __post_init__(self):
        if int(self.n_runs) != self.n_runs or self.n_runs < 1:
            raise ValueError(f"n_runs must be an integer >= 1, got {self.n_runs}")
        if int(self.histogram_bins) != self.histogram_bins or self.histogram_bins < 2:
            raise ValueError(f"histogram_bins must be an integer >= 2, got {self.histogram_bins}")
        if int(self.time_stride) != self.time_stride or self.time_stride < 1:
            raise ValueError(f"time_stride must be an integer >= 1, got {self.time_stride}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")
        if self.acceleration_draw is not None:
            lo, hi = self.acceleration_draw
            if not lo < hi:
                raise ValueError(f"acceleration_draw needs min < max, got {self.acceleration_draw}")


@dataclass
class AggregateStats:
    mode: str
    n_runs: int
    t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mean_accel_err: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rmse_accel: np.ndarray = field(default_factory=lambda: np.zeros(0))
    std_accel: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mean_pos_err: np.ndarray = field(default_factory=lambda: np.zeros(0))
    rmse_pos: np.ndarray = field(default_factory=lambda: np.zeros(0))
    std_pos: np.ndarray = field(default_factory=lambda: np.zeros(0))
    # fused-minus-truth at quantum epochs, one bin per epoch
    quantum_t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    quantum_mean_err: np.ndarray = field(default_factory=lambda: np.zeros(0))
    quantum_rmse: np.ndarray = field(default_factory=lambda: np.zeros(0))
    final_pos_err: np.ndarray = field(default_factory=lambda: np.zeros(0))
    run_seeds: list = field(default_factory=list)
    convergence_failures: int = 0
    quantum_epochs: int = 0
    # single-shot experiments
    errors: np.ndarray = field(default_factory=lambda: np.zeros(0))
    hist_edges: np.ndarray = field(default_factory=lambda: np.zeros(0))
    hist_counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def convergence_failure_rate(self) -> float:
        return self.convergence_failures / self.quantum_epochs if self.quantum_epochs else 0.0


class _Moments:
    """Running first/second moments, reduced strictly in run-index order."""

    def __init__(self):
        self.n = 0
        self.s1 = None
        self.s2 = None

    def add(self, x: np.ndarray):
        if self.s1 is None:
            self.s1 = np.zeros_like(x, dtype=float)
            self.s2 = np.zeros_like(x, dtype=float)
        self.s1 += x
        self.s2 += x * x
        self.n += 1

    def finish(self):
        mean = self.s1 / self.n
        ms = self.s2 / self.n
        return mean, np.sqrt(ms), np.sqrt(np.maximum(ms - mean * mean, 0.0))


def _run_one(args) -> tuple[int, dict]:
    scenario, index, seed, stride = args
    try:
        series = run_scenario(replace(scenario, seed=seed))
    except Exception as exc:
        raise RuntimeError(f"run {index} (seed {seed}) failed: {exc}") from exc
    sel = slice(stride - 1, None, stride)
    return index, {
        "t": series.t[sel],
        "accel_err": series.accel_err[sel],
        "pos_err": series.pos_err[sel],
        "quantum_t": series.t[series.quantum_tick],
        "fused_err": series.fused_err,
        "final_pos_err": float(series.pos_err[-1]),
        "failures": series.convergence_failures,
        "epochs": int(series.quantum_tick.sum()),
    }


def run_monte_carlo(cfg: ExperimentConfig, workers: int = 1) -> AggregateStats:
    """Run ``cfg.n_runs`` scenarios and aggregate error curves per time bin.

    Run ``k`` uses seed ``seeding.run_seed(master_seed, k)`` and the reduction
    walks runs in index order, so results are identical for any ``workers``.
    """
    seeds = [seeding.run_seed(cfg.master_seed, k) for k in range(cfg.n_runs)]
    jobs = [(cfg.scenario, k, s, cfg.time_stride) for k, s in enumerate(seeds)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers)))
            return _reduce(cfg, seeds, results)
    return _reduce(cfg, seeds, map(_run_one, jobs))


def _reduce(cfg, seeds, results) -> AggregateStats:
    acc, pos, fused = _Moments(), _Moments(), _Moments()
    final, failures, epochs = [], 0, 0
    t = quantum_t = None
    for expected, (index, rec) in enumerate(results):
        assert index == expected
        t, quantum_t = rec["t"], rec["quantum_t"]
        acc.add(rec["accel_err"])
        pos.add(rec["pos_err"])
        if rec["epochs"]:
            fused.add(rec["fused_err"])
        final.append(rec["final_pos_err"])
        failures += rec["failures"]
        epochs += rec["epochs"]
    out = AggregateStats(mode=cfg.scenario.mode.value, n_runs=cfg.n_runs, run_seeds=seeds)
    out.t = t
    out.mean_accel_err, out.rmse_accel, out.std_accel = acc.finish()
    out.mean_pos_err, out.rmse_pos, out.std_pos = pos.finish()
    if fused.n:
        out.quantum_t = quantum_t
        out.quantum_mean_err, out.quantum_rmse, _ = fused.finish()
    out.final_pos_err = np.asarray(final)
    out.convergence_failures = failures
    out.quantum_epochs = epochs
    return out


def single_shot_histogram(cfg: ExperimentConfig, noise_mode=None) -> AggregateStats:
    """One-epoch fusion errors ``a_out - a`` for uniformly drawn accelerations.

    Each draw: ``a ~ U(lo, hi)``, ``a_c = a + w(0)`` with ``w(0)`` one sample of
    the classical error model at t = 0 (stationary Gauss-Markov offset, zero
    drift), S from the chosen noise mode, then unwrap and fusion noise. The
    truth and classical draws depend only on the master seed, so runs with
    different noise modes are paired.
    """
    if cfg.acceleration_draw is None:
        raise ValueError("single-shot experiment needs acceleration_draw (range_min/range_max)")
    scen = cfg.scenario
    mode = NoiseMode.parse(noise_mode if noise_mode is not None else scen.fusion.noise_mode)
    qcfg, ccfg = scen.quantum, scen.classical
    n = cfg.n_runs

    rng = seeding.stream(cfg.master_seed, seeding.SINGLE_SHOT)
    lo, hi = cfg.acceleration_draw
    a = rng.uniform(lo, hi, n)
    z = rng.standard_normal((n, 2))
    w0 = ccfg.constant_bias + ccfg.sigma_white * z[:, 0] + ccfg.sigma_bias_offset * z[:, 1]
    a_c = a + w0

    rng_q = seeding.stream(cfg.master_seed, seeding.QUANTUM)
    S = quantum_signal_noisy(qcfg, a, mode, rng_q)
    a_f, _, _ = unwrap_batch(qcfg, scen.fusion, S, a_c)
    if mode is NoiseMode.ACCELERATION:
        a_f = a_f + shot_noise_sigma(qcfg) * rng_q.standard_normal(n)
    errors = a_f - a

    counts, edges = histogram(errors, cfg.histogram_bins)
    return AggregateStats(
        mode=mode.value, n_runs=n, errors=errors, hist_edges=edges, hist_counts=counts,
        run_seeds=[cfg.master_seed],
    )


# spreads below this are rounding noise of the inversion, not error structure
DEGENERATE_SPREAD = 1e-12


def histogram(values: np.ndarray, bins: int):
    """Counts over ``bins`` contiguous bins spanning [min, max]."""
    if values.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < DEGENERATE_SPREAD:
        # every value lands in the first bin
        lo = 0.5 * (lo + hi) - 0.5 * DEGENERATE_SPREAD
        hi = lo + bins * DEGENERATE_SPREAD
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return counts, edges


def error_summary(errors: np.ndarray) -> dict:
    return {
        "n": int(errors.size),
        "mean": float(np.mean(errors)),
        "std": float(np.std(errors)),
        "excess_kurtosis": float(sps.kurtosis(errors)) if np.std(errors) > 0 else 0.0,
        "min": float(np.min(errors)),
        "max": float(np.max(errors)),
    }


# --------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "" if math.isnan(x) else repr(x)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


TIMESERIES_COLUMNS = (
    "t", "a_true", "a_meas_corrected", "a_fused", "accel_err", "pos_true",
    "pos_est", "pos_err", "vel_err", "quantum_tick_flag", "converged_flag",
)
AGGREGATE_COLUMNS = (
    "mode", "t", "mean_accel_err", "rmse_accel", "std_accel", "mean_pos_err", "rmse_pos", "std_pos",
)
QUANTUM_COLUMNS = ("mode", "t", "mean_fused_err", "rmse_fused")
HISTOGRAM_COLUMNS = ("mode", "bin_low", "bin_high", "count")


def write_timeseries(path: Path, series: RunSeries) -> None:
    cols = (
        series.t, series.a_true, series.a_meas, series.a_fused, series.accel_err,
        series.pos_true, series.pos_est, series.pos_err, series.vel_err,
        series.quantum_tick, series.converged,
    )
    _write_csv(path, TIMESERIES_COLUMNS, zip(*cols))


def write_outputs(
    directory,
    stats: Sequence[AggregateStats] = (),
    series: Sequence[RunSeries] = (),
    manifest: Optional[dict] = None,
) -> list[Path]:
    """Write every CSV plus ``manifest.json`` into ``directory``.

    Returns the written paths. Empty inputs produce header-only files.
    """
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    written = []
    for k, s in enumerate(series):
        path = out / f"timeseries_run{k}.csv"
        write_timeseries(path, s)
        written.append(path)

    def agg_rows():
        for st in stats:
            for row in zip(st.t, st.mean_accel_err, st.rmse_accel, st.std_accel,
                           st.mean_pos_err, st.rmse_pos, st.std_pos):
                yield (st.mode, *row)

    def quantum_rows():
        for st in stats:
            for row in zip(st.quantum_t, st.quantum_mean_err, st.quantum_rmse):
                yield (st.mode, *row)

    def hist_rows():
        for st in stats:
            for lo, hi, c in zip(st.hist_edges[:-1], st.hist_edges[1:], st.hist_counts):
                yield (st.mode, lo, hi, c)

    for name, header, rows in (
        ("aggregate.csv", AGGREGATE_COLUMNS, agg_rows()),
        ("quantum_epochs.csv", QUANTUM_COLUMNS, quantum_rows()),
        ("histogram.csv", HISTOGRAM_COLUMNS, hist_rows()),
    ):
        _write_csv(out / name, header, rows)
        written.append(out / name)

    path = out / "manifest.json"
    try:
        path.write_text(json.dumps(manifest or {}, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    written.append(path)
    return written
