"""1-D strapdown dead reckoning with periodic quantum recalibration.

Classical samples arrive at ``classical_rate``; every ``classical_rate /
quantum_rate`` ticks the quantum sensor fires, the wrapped fringe is unwrapped
against the corrected classical reading and the fused value resets the
classical output (a constant additive correction held until the next epoch).

Tick ``i`` ends at ``t_i = (i + 1) dt``. The true acceleration is held over
``(t_i - dt, t_i]`` and both sensors sample it at ``t_i``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import lfilter

from . import seeding
from .fusion import (
    CalibrationState,
    FusionConfig,
    apply_fusion_noise,
    convergence_check,
    recalibrate,
    unwrap,
)
from .quadrature import QuadraturePair, unwrap_quadrature
from .sensor_models import (
    ClassicalSensorConfig,
    NoiseMode,
    QuantumSensorConfig,
    classical_error_series,
    initial_noise_state,
    quantum_signal,
    quantum_signal_noisy,
)


class Mode(str, enum.Enum):
    CLASSICAL_ONLY = "classical"
    FUSED = "fused"
    FUSED_Q2 = "fused-q2"

    @classmethod
    def parse(cls, value: "str | Mode") -> "Mode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {
            "classical": cls.CLASSICAL_ONLY,
            "classical-only": cls.CLASSICAL_ONLY,
            "classicalonly": cls.CLASSICAL_ONLY,
            "fused": cls.FUSED,
            "fused-q1": cls.FUSED,
            "fusion-q1": cls.FUSED,
            "fused-q2": cls.FUSED_Q2,
            "fusedq2": cls.FUSED_Q2,
            "fusion-q2": cls.FUSED_Q2,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown mode {value!r}; expected classical, fused or fused-q2") from None


@dataclass(frozen=True)
class ScenarioConfig:
    duration: float = 1000.0
    classical_rate: float = 200.0
    quantum_rate: float = 1.0
    sigma_truth: float = 1.0
    mode: Mode = Mode.FUSED
    quantum: QuantumSensorConfig = field(default_factory=QuantumSensorConfig)
    classical: ClassicalSensorConfig = field(default_factory=ClassicalSensorConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    seed: int = 0
    truth_time_constant: float = 0.0  # low-pass on the truth profile, 0 = white
    ideal_switching: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if not self.duration > 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        if not (self.classical_rate > 0 and self.quantum_rate > 0):
            raise ValueError("sample rates must be positive")
        ratio = self.classical_rate / self.quantum_rate
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ValueError(
                f"classical_rate ({self.classical_rate}) must be an integer multiple "
                f"of quantum_rate ({self.quantum_rate})"
            )
        ticks = self.duration * self.classical_rate
        if abs(ticks - round(ticks)) > 1e-6:
            raise ValueError("duration must span a whole number of classical ticks")
        if not self.sigma_truth >= 0:
            raise ValueError(f"sigma_truth must be >= 0, got {self.sigma_truth}")
        if not self.truth_time_constant >= 0:
            raise ValueError("truth_time_constant must be >= 0")
        if self.classical.sample_rate != self.classical_rate:
            raise ValueError("classical.sample_rate must equal classical_rate")
        if not math.isclose(self.quantum.sample_period * self.quantum_rate, 1.0, rel_tol=1e-12):
            raise ValueError("quantum.sample_period must equal 1 / quantum_rate")

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration * self.classical_rate))

    @property
    def ticks_per_quantum(self) -> int:
        return int(round(self.classical_rate / self.quantum_rate))


@dataclass(frozen=True)
class NavState:
    t: float = 0.0
    position: float = 0.0
    velocity: float = 0.0


@dataclass
class RunSeries:
    t: np.ndarray
    a_true: np.ndarray
    a_meas: np.ndarray  # corrected classical reading used for navigation
    a_fused: np.ndarray  # fused measurement at quantum ticks, NaN elsewhere
    a_c_epoch: np.ndarray  # corrected classical input to the fusion, NaN off-tick
    pos_true: np.ndarray
    pos_est: np.ndarray
    vel_true: np.ndarray
    vel_est: np.ndarray
    quantum_tick: np.ndarray
    converged: np.ndarray
    sensor_used: np.ndarray  # 0 off-tick, else 1 or 2
    convergence_failures: int = 0

    @property
    def accel_err(self) -> np.ndarray:
        return self.a_meas - self.a_true

    @property
    def pos_err(self) -> np.ndarray:
        return self.pos_est - self.pos_true

    @property
    def vel_err(self) -> np.ndarray:
        return self.vel_est - self.vel_true

    @property
    def fused_err(self) -> np.ndarray:
        """Fused-minus-truth at quantum ticks only."""
        return (self.a_fused - self.a_true)[self.quantum_tick]

    def __len__(self):
        return self.t.size


def generate_truth(
    sigma_a: float,
    duration: float,
    rate: float,
    rng: np.random.Generator,
    time_constant: float = 0.0,
) -> np.ndarray:
    """Zero-mean Gaussian acceleration, one value per tick (zero-order hold).

    ``time_constant > 0`` colours the sequence with a first-order low-pass
    that preserves the marginal standard deviation ``sigma_a``.
    """
    if not rate > 0:
        raise ValueError(f"rate must be > 0, got {rate}")
    n = int(round(duration * rate))
    z = rng.standard_normal(n)
    if time_constant > 0:
        phi = math.exp(-1.0 / (rate * time_constant))
        z = lfilter([math.sqrt(1.0 - phi * phi)], [1.0, -phi], z, zi=[phi * rng.standard_normal()])[0]
    return sigma_a * z


def integrate_step(state: NavState, a: float, dt: float) -> NavState:
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    # grouping matches integrate_series so the two agree bit-for-bit
    return NavState(
        t=state.t + dt,
        position=state.position + (state.velocity * dt + 0.5 * a * dt * dt),
        velocity=state.velocity + a * dt,
    )


def integrate_series(a: np.ndarray, dt: float, state: NavState = NavState()):
    """Exact ZOH integration of a sampled profile; returns (position, velocity)."""
    a = np.asarray(a, dtype=float)
    dv = a * dt
    dv[0] += state.velocity
    velocity = np.cumsum(dv)
    v_prev = np.concatenate(([state.velocity], velocity[:-1]))
    dx = v_prev * dt + 0.5 * a * dt * dt
    dx[0] += state.position
    return np.cumsum(dx), velocity


def _quantum_epoch(cfg: ScenarioConfig, pair, a_true: float, a_c: float, rng_a, rng_b):
    mode = cfg.fusion.noise_mode
    if cfg.mode is Mode.FUSED_Q2:
        exact = (quantum_signal(pair.sensor_a, a_true), quantum_signal(pair.sensor_b, a_true))
        S1 = float(quantum_signal_noisy(pair.sensor_a, a_true, mode, rng_a))
        S2 = float(quantum_signal_noisy(pair.sensor_b, a_true, mode, rng_b))
        result = unwrap_quadrature(
            pair, cfg.fusion, S1, S2, a_c, selection=exact if cfg.ideal_switching else None
        )
        qcfg = pair.sensor(result.sensor)
    else:
        qcfg = cfg.quantum
        S = float(quantum_signal_noisy(qcfg, a_true, mode, rng_a))
        result = unwrap(qcfg, cfg.fusion, S, a_c)
    result = apply_fusion_noise(qcfg, result, mode, rng_a)
    ok = convergence_check(result.a_out, result.a_f, cfg.fusion.epsilon(qcfg))
    return replace(result, converged=ok)


def run_scenario(cfg: ScenarioConfig) -> RunSeries:
    """Simulate one run; a deterministic function of ``cfg`` (seed included)."""
    n = cfg.n_ticks
    dt = 1.0 / cfg.classical_rate
    t = (np.arange(n) + 1) * dt

    a_true = generate_truth(
        cfg.sigma_truth, cfg.duration, cfg.classical_rate,
        seeding.stream(cfg.seed, seeding.TRUTH), cfg.truth_time_constant,
    )
    rng_c = seeding.stream(cfg.seed, seeding.CLASSICAL)
    noise0 = initial_noise_state(cfg.classical, rng_c)
    errors, _ = classical_error_series(cfg.classical, t, rng_c, noise0)
    raw = a_true + errors

    a_meas = raw.copy()
    a_fused = np.full(n, np.nan)
    a_c_epoch = np.full(n, np.nan)
    tick = np.zeros(n, dtype=bool)
    converged = np.zeros(n, dtype=bool)
    sensor_used = np.zeros(n, dtype=np.int8)
    failures = 0

    if cfg.mode is not Mode.CLASSICAL_ONLY:
        rng_a = seeding.stream(cfg.seed, seeding.QUANTUM)
        rng_b = seeding.stream(cfg.seed, seeding.QUANTUM_B)
        pair = QuadraturePair.from_sensor(cfg.quantum) if cfg.mode is Mode.FUSED_Q2 else None
        cal = CalibrationState()
        start = 0
        for i in range(cfg.ticks_per_quantum - 1, n, cfg.ticks_per_quantum):
            a_meas[start:i] = raw[start:i] + cal.correction
            a_c = float(raw[i]) + cal.correction
            result = _quantum_epoch(cfg, pair, float(a_true[i]), a_c, rng_a, rng_b)
            if result.converged:
                cal = recalibrate(cal, float(raw[i]), result.a_out, float(t[i]))
            else:
                failures += 1
            a_meas[i] = raw[i] + cal.correction
            a_fused[i] = result.a_out
            a_c_epoch[i] = a_c
            tick[i] = True
            converged[i] = result.converged
            sensor_used[i] = result.sensor
            start = i + 1
        a_meas[start:] = raw[start:] + cal.correction

    pos_true, vel_true = integrate_series(a_true, dt)
    pos_est, vel_est = integrate_series(a_meas, dt)
    return RunSeries(
        t=t, a_true=a_true, a_meas=a_meas, a_fused=a_fused, a_c_epoch=a_c_epoch,
        pos_true=pos_true, pos_est=pos_est, vel_true=vel_true, vel_est=vel_est,
        quantum_tick=tick, converged=converged, sensor_used=sensor_used,
        convergence_failures=failures,
    )
