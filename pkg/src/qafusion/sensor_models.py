"""Forward models for the cold-atom and classical accelerometers.

The quantum sensor maps an acceleration ``a`` onto a fringe signal

    S = N sin(k_eff a T^2 + phi0),     k_eff = 4 pi / lambda

and the classical sensor reports ``a + w(t)`` where ``w`` is a constant bias
plus white noise, a first-order Gauss-Markov bias offset and a bias drift
whose variance grows as ``sigma_bd^2 sqrt(t)``.

Units are SI throughout (m/s^2, s, m). ``sigma_bias_drift`` carries
m/s^2 s^(-1/4) so that ``sigma_bd^2 sqrt(t)`` is a variance in (m/s^2)^2.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter


class NoiseMode(str, enum.Enum):
    """Where shot noise enters the quantum measurement chain."""

    NONE = "none"
    ACCELERATION = "acceleration"  # nu_f added to the recovered acceleration
    SIGNAL = "signal"  # atom-counting noise added to S before inversion

    @classmethod
    def parse(cls, value: "str | NoiseMode") -> "NoiseMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {
            "none": cls.NONE,
            "off": cls.NONE,
            "acceleration": cls.ACCELERATION,
            "acceleration_domain": cls.ACCELERATION,
            "signal": cls.SIGNAL,
            "signal_domain": cls.SIGNAL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(
                f"unknown noise mode {value!r}; expected one of none, acceleration, signal"
            ) from None


@dataclass(frozen=True)
class QuantumSensorConfig:
    n_atoms: float = 1000
    wavelength: float = 780e-9
    half_interrogation: float = 1e-3
    pulse_width: float = 1e-6  # stored only, no model term uses it
    initial_phase: float = 0.0
    sample_period: float = 1.0

    def __post_init__(self):
        if not self.n_atoms >= 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        for name in ("wavelength", "half_interrogation", "sample_period"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if not self.pulse_width >= 0:
            raise ValueError(f"pulse_width must be >= 0, got {self.pulse_width}")
        if not math.isfinite(self.initial_phase):
            raise ValueError("initial_phase must be finite")

    @property
    def k_eff(self) -> float:
        return effective_wavenumber(self)

    @property
    def scale_factor(self) -> float:
        """Interferometer phase per unit acceleration, rad/(m/s^2)."""
        return self.k_eff * self.half_interrogation**2

    @property
    def fringe_period(self) -> float:
        """Acceleration change that advances the phase by one full fringe."""
        return 2.0 * math.pi / self.scale_factor


@dataclass(frozen=True)
class ClassicalSensorConfig:
    sample_rate: float = 200.0
    constant_bias: float = 2e-3
    sigma_white: float = 1e-3
    sigma_bias_offset: float = 1e-3
    gm_time_constant: float = 3600.0
    sigma_bias_drift: float = 1e-3

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        if not self.gm_time_constant > 0:
            raise ValueError(f"gm_time_constant must be > 0, got {self.gm_time_constant}")
        for name in ("sigma_white", "sigma_bias_offset", "sigma_bias_drift"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not math.isfinite(self.constant_bias):
            raise ValueError("constant_bias must be finite")


@dataclass(frozen=True)
class ClassicalNoiseState:
    gm_value: float = 0.0
    drift_value: float = 0.0
    last_time: float = 0.0


# --------------------------------------------------------------------------
# quantum sensor


def effective_wavenumber(cfg: QuantumSensorConfig) -> float:
    return 4.0 * math.pi / cfg.wavelength


def phase_shift(cfg: QuantumSensorConfig, a):
    return cfg.scale_factor * a


def quantum_signal(cfg: QuantumSensorConfig, a):
    """Noise-free fringe signal ``N sin(k_eff a T^2 + phi0)``; accepts arrays."""
    return cfg.n_atoms * np.sin(phase_shift(cfg, a) + cfg.initial_phase)


def quantum_signal_noisy(cfg: QuantumSensorConfig, a, mode, rng: np.random.Generator):
    """Fringe signal as read out under ``mode``.

    Only ``NoiseMode.SIGNAL`` perturbs S (Gaussian, std sqrt(N), clamped to
    [-N, N]); the other modes return the exact signal and consume no draws.
    """
    mode = NoiseMode.parse(mode)
    signal = quantum_signal(cfg, a)
    if mode is not NoiseMode.SIGNAL:
        return signal
    n = cfg.n_atoms
    noisy = signal + math.sqrt(n) * rng.standard_normal(np.shape(signal))
    return np.clip(noisy, -n, n)


def shot_noise_sigma(cfg: QuantumSensorConfig) -> float:
    return 1.0 / (cfg.scale_factor * math.sqrt(cfg.n_atoms))


# --------------------------------------------------------------------------
# classical sensor


def initial_noise_state(
    cfg: ClassicalSensorConfig, rng: np.random.Generator, t0: float = 0.0
) -> ClassicalNoiseState:
    """Start the Gauss-Markov offset in its stationary law, drift at zero."""
    gm = cfg.sigma_bias_offset * float(rng.standard_normal())
    return ClassicalNoiseState(gm_value=gm, drift_value=0.0, last_time=t0)


def _gm_coefficients(cfg: ClassicalSensorConfig, dt):
    dt = np.asarray(dt, dtype=float)
    phi = np.exp(-dt / cfg.gm_time_constant)
    drive = cfg.sigma_bias_offset * np.sqrt(-np.expm1(-2.0 * dt / cfg.gm_time_constant))
    return phi, drive


def sample_classical(
    cfg: ClassicalSensorConfig,
    state: ClassicalNoiseState,
    a_true: float,
    t: float,
    rng: np.random.Generator,
) -> tuple[float, ClassicalNoiseState]:
    """One classical reading at time ``t``; returns the reading and new state.

    Draws three standard normals per call in the order (white, Gauss-Markov
    innovation, drift innovation), the same order used by
    :func:`classical_error_series`.
    """
    if t < state.last_time:
        raise ValueError(f"time went backwards: t={t} < last_time={state.last_time}")
    z_white, z_gm, z_drift = rng.standard_normal(3)
    dt = t - state.last_time
    phi, drive = _gm_coefficients(cfg, dt)
    gm = float(phi) * state.gm_value + float(drive) * z_gm
    drift_var = cfg.sigma_bias_drift**2 * (math.sqrt(t) - math.sqrt(state.last_time))
    drift = state.drift_value + math.sqrt(drift_var) * z_drift
    reading = a_true + cfg.constant_bias + cfg.sigma_white * z_white + gm + drift
    return reading, replace(state, gm_value=gm, drift_value=drift, last_time=t)


def classical_error_series(
    cfg: ClassicalSensorConfig,
    times: np.ndarray,
    rng: np.random.Generator,
    state: ClassicalNoiseState,
) -> tuple[np.ndarray, ClassicalNoiseState]:
    """Vectorised equivalent of calling :func:`sample_classical` at each time.

    Returns the error ``w(t_k)`` for every entry of ``times`` (which must be
    non-decreasing and start at or after ``state.last_time``) together with the
    final noise state. Consumes the random stream exactly as the scalar loop.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return np.zeros(0), state
    prev = np.concatenate(([state.last_time], times[:-1]))
    dt = times - prev
    if np.any(dt < 0):
        raise ValueError("times must be non-decreasing and not precede the noise state")
    z = rng.standard_normal((times.size, 3))
    phi, drive = _gm_coefficients(cfg, dt)
    innovations = drive * z[:, 1]
    if np.all(phi == phi[0]):
        gm, _ = lfilter([1.0], [1.0, -phi[0]], innovations, zi=[phi[0] * state.gm_value])
    else:
        gm = np.empty_like(innovations)
        value = state.gm_value
        for k in range(times.size):
            value = phi[k] * value + innovations[k]
            gm[k] = value
    drift_var = cfg.sigma_bias_drift**2 * (np.sqrt(times) - np.sqrt(prev))
    drift = state.drift_value + np.cumsum(np.sqrt(drift_var) * z[:, 2])
    errors = cfg.constant_bias + cfg.sigma_white * z[:, 0] + gm + drift
    final = ClassicalNoiseState(
        gm_value=float(gm[-1]), drift_value=float(drift[-1]), last_time=float(times[-1])
    )
    return errors, final
