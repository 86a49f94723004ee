"""Two quantum sensors in phase quadrature with linear-region switching.

Sensor 1 runs at phi0 = 0 and sensor 2 at phi0 = pi/2. Whenever one fringe is
near a peak, the other sits near a zero crossing where ``dS/da`` is largest,
so reading from ``|S| <= N sqrt(2)/2`` keeps the inversion well conditioned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .fusion import FusionConfig, UnwrapResult, unwrap
from .sensor_models import QuantumSensorConfig

LINEAR_FRACTION = math.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class QuadraturePair:
    sensor_a: QuantumSensorConfig
    sensor_b: QuantumSensorConfig

    def __post_init__(self):
        if replace(self.sensor_b, initial_phase=self.sensor_a.initial_phase) != self.sensor_a:
            raise ValueError("quadrature sensors may differ only in initial_phase")
        if self.sensor_b.initial_phase - self.sensor_a.initial_phase != math.pi / 2:
            raise ValueError("sensor_b must lead sensor_a by exactly pi/2")

    @classmethod
    def from_sensor(cls, cfg: QuantumSensorConfig) -> "QuadraturePair":
        """Build the pair with phases (0, pi/2) from one sensor's parameters."""
        return cls(replace(cfg, initial_phase=0.0), replace(cfg, initial_phase=math.pi / 2))

    def sensor(self, index: int) -> QuantumSensorConfig:
        return {1: self.sensor_a, 2: self.sensor_b}[index]


def select_sensor(S1: float, S2: float, N: float) -> int:
    """Index (1 or 2) of the sensor read in its linear-sensitivity region.

    Sensor 1 wins when both qualify; if neither does (noisy inputs), the one
    with the smaller ``|S|`` is taken, again preferring sensor 1 on a tie.
    """
    limit = N * LINEAR_FRACTION
    ok1, ok2 = abs(S1) <= limit, abs(S2) <= limit
    if ok1:
        return 1
    if ok2:
        return 2
    return 1 if abs(S1) <= abs(S2) else 2


def unwrap_quadrature(
    pair: QuadraturePair,
    fcfg: FusionConfig,
    S1: float,
    S2: float,
    a_c: float,
    selection: tuple[float, float] | None = None,
) -> UnwrapResult:
    """Unwrap with whichever sensor is in its linear region.

    ``selection`` optionally supplies the signals used only for the switching
    decision (e.g. noise-free values, for error-free switching), while the
    inversion still uses ``S1``/``S2``.
    """
    s1_sel, s2_sel = selection if selection is not None else (S1, S2)
    index = select_sensor(s1_sel, s2_sel, pair.sensor_a.n_atoms)
    cfg = pair.sensor(index)
    result = unwrap(cfg, fcfg, S1 if index == 1 else S2, a_c)
    return replace(result, sensor=index)
