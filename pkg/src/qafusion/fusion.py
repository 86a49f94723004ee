"""Maximum-likelihood phase unwrapping of the quantum fringe signal.

Inverting ``S = N sin(theta)`` with ``theta = k_eff a T^2 + phi0`` leaves a
two-branch, integer-indexed family of accelerations::

    s = +1:  a = (asin(S/N) + 2 n pi - phi0) / (k_eff T^2)
    s = -1:  a = ((2 n + 1) pi - asin(S/N) - phi0) / (k_eff T^2)

A classical reading ``a_c`` picks one member. With Gaussian shot noise of
fixed width on the fused output, the likelihood is maximised by the
candidate nearest ``a_c``, so :func:`unwrap` searches a small window of
windings around the rough estimates and returns that candidate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .sensor_models import NoiseMode, QuantumSensorConfig, shot_noise_sigma

TWO_PI = 2.0 * math.pi


class SignalRangeError(ValueError):
    """Raised when ``|S| > N``, outside the domain of arcsin."""


class EmptyCandidateSetError(RuntimeError):
    """Raised if an unwrap search produced no candidates at all."""


@dataclass(frozen=True)
class BranchParams:
    sign: int
    winding: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"branch sign must be +1 or -1, got {self.sign}")


@dataclass(frozen=True)
class FusionConfig:
    window_halfwidth: int = 2
    convergence_epsilon: Optional[float] = None  # None -> 4 sigma_f
    noise_mode: NoiseMode = NoiseMode.ACCELERATION

    def __post_init__(self):
        if int(self.window_halfwidth) != self.window_halfwidth or self.window_halfwidth < 1:
            raise ValueError(f"window_halfwidth must be an integer >= 1, got {self.window_halfwidth}")
        if self.convergence_epsilon is not None and not self.convergence_epsilon > 0:
            raise ValueError(f"convergence_epsilon must be > 0, got {self.convergence_epsilon}")
        object.__setattr__(self, "noise_mode", NoiseMode.parse(self.noise_mode))

    def epsilon(self, qcfg: QuantumSensorConfig) -> float:
        if self.convergence_epsilon is None:
            return 4.0 * shot_noise_sigma(qcfg)
        return self.convergence_epsilon


@dataclass(frozen=True)
class UnwrapResult:
    a_f: float
    branch: BranchParams
    residual: float
    converged: bool = True
    a_out: float = math.nan
    sensor: int = 1

    def __post_init__(self):
        if math.isnan(self.a_out):
            object.__setattr__(self, "a_out", self.a_f)


@dataclass(frozen=True)
class CalibrationState:
    correction: float = 0.0
    last_update: float = 0.0

    def apply(self, a_c_raw):
        return a_c_raw + self.correction


def round_half_away(x):
    """Nearest integer, ties away from zero (works on scalars and arrays)."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _normalised_asin(qcfg: QuantumSensorConfig, S) -> float:
    ratio = S / qcfg.n_atoms
    if not abs(ratio) <= 1.0:
        raise SignalRangeError(f"|S| = {abs(S)} exceeds N = {qcfg.n_atoms}")
    return math.asin(ratio)


def _candidate(x, sign, winding, phi0, scale):
    # shared by the scalar, batch and brute-force paths so that all three
    # produce bit-identical candidates for the same (x, s, n)
    if np.ndim(sign) == 0:
        if sign == 1:
            return (x + TWO_PI * winding - phi0) / scale
        return ((2 * winding + 1) * math.pi - x - phi0) / scale
    plus = (x + TWO_PI * winding - phi0) / scale
    minus = ((2 * winding + 1) * math.pi - x - phi0) / scale
    return np.where(sign == 1, plus, minus)


def candidate_acceleration(qcfg: QuantumSensorConfig, S: float, branch: BranchParams) -> float:
    x = _normalised_asin(qcfg, S)
    return _candidate(x, branch.sign, branch.winding, qcfg.initial_phase, qcfg.scale_factor)


def _rough(x, a_c, phi0, scale):
    turns = scale * a_c / TWO_PI
    n1 = round_half_away(turns - (x - phi0) / TWO_PI)
    n2 = round_half_away(turns + (x + phi0) / TWO_PI - 0.5)
    return n1, n2


def rough_winding_estimates(qcfg: QuantumSensorConfig, S: float, a_c: float) -> tuple[int, int]:
    x = _normalised_asin(qcfg, S)
    n1, n2 = _rough(x, a_c, qcfg.initial_phase, qcfg.scale_factor)
    return int(n1), int(n2)


def _pick(candidates):
    # candidates: iterable of (distance, a, sign, winding)
    best = None
    for item in candidates:
        key = (item[0], abs(item[1]), 0 if item[2] == 1 else 1)
        if best is None or key < best[0]:
            best = (key, item)
    if best is None:
        raise EmptyCandidateSetError("no unwrap candidates were generated")
    return best[1]


def unwrap(
    qcfg: QuantumSensorConfig, fcfg: FusionConfig, S: float, a_c: float
) -> UnwrapResult:
    """Select the branch and winding whose acceleration is nearest ``a_c``.

    Ties are broken towards smaller ``|a_f|`` and then towards ``s = +1``.
    The returned result is pre-noise: ``a_out == a_f``.
    """
    if not math.isfinite(a_c):
        raise ValueError(f"classical acceleration must be finite, got {a_c}")
    x = _normalised_asin(qcfg, S)
    phi0, scale = qcfg.initial_phase, qcfg.scale_factor
    n1, n2 = _rough(x, a_c, phi0, scale)
    n1, n2 = int(n1), int(n2)
    w = int(fcfg.window_halfwidth)

    def candidates():
        for sign, centre in ((1, n1), (-1, n2)):
            for n in range(centre - w, centre + w + 1):
                a = _candidate(x, sign, n, phi0, scale)
                yield abs(a - a_c), a, sign, n

    dist, a_f, sign, n = _pick(candidates())
    return UnwrapResult(a_f=a_f, branch=BranchParams(sign, n), residual=dist)


def unwrap_batch(qcfg: QuantumSensorConfig, fcfg: FusionConfig, S, a_c):
    """Vectorised :func:`unwrap` over arrays of signals and classical readings.

    Returns ``(a_f, sign, winding)`` arrays; same search window and tie rules.
    """
    S = np.asarray(S, dtype=float)
    a_c = np.asarray(a_c, dtype=float)
    ratio = S / qcfg.n_atoms
    if np.any(~(np.abs(ratio) <= 1.0)):
        raise SignalRangeError("signal magnitude exceeds N")
    x = np.arcsin(ratio)
    phi0, scale = qcfg.initial_phase, qcfg.scale_factor
    n1, n2 = _rough(x, a_c, phi0, scale)
    offsets = np.arange(-fcfg.window_halfwidth, fcfg.window_halfwidth + 1)
    windings = np.concatenate(
        [n1[..., None] + offsets, n2[..., None] + offsets], axis=-1
    )
    signs = np.concatenate([np.ones_like(offsets), -np.ones_like(offsets)])
    signs = np.broadcast_to(signs, windings.shape)
    cand = _candidate(x[..., None], signs, windings, phi0, scale)
    dist = np.abs(cand - a_c[..., None])
    tied = dist == dist.min(axis=-1, keepdims=True)
    mag = np.where(tied, np.abs(cand), np.inf)
    tied &= mag == mag.min(axis=-1, keepdims=True)
    # s = +1 columns come first, so the first surviving column wins the last tie
    idx = np.argmax(tied, axis=-1)[..., None]
    pick = lambda arr: np.take_along_axis(arr, idx, axis=-1)[..., 0]
    return pick(cand), pick(signs), pick(windings).astype(np.int64)


def brute_force_unwrap(qcfg: QuantumSensorConfig, S: float, a_c: float, a_range: float) -> UnwrapResult:
    """Exhaustive nearest-candidate search over ``[-a_range, a_range]``.

    Test oracle: enumerates every (s, n) whose candidate lies in the range and
    never consults the rough winding estimates.
    """
    if not a_range > 0:
        raise ValueError(f"a_range must be > 0, got {a_range}")
    x = _normalised_asin(qcfg, S)
    phi0, scale = qcfg.initial_phase, qcfg.scale_factor
    reach = a_range * scale
    ranges = {
        1: (math.ceil((-reach - x + phi0) / TWO_PI), math.floor((reach - x + phi0) / TWO_PI)),
        -1: (
            math.ceil((-reach + x + phi0 - math.pi) / TWO_PI),
            math.floor((reach + x + phi0 - math.pi) / TWO_PI),
        ),
    }
    cand, signs, windings = [], [], []
    for sign, (lo, hi) in ranges.items():
        n = np.arange(lo - 1, hi + 2)
        a = _candidate(x, np.full(n.shape, sign), n, phi0, scale)
        keep = np.abs(a) <= a_range
        cand.append(a[keep])
        signs.append(np.full(keep.sum(), sign))
        windings.append(n[keep])
    cand = np.concatenate(cand)
    if cand.size == 0:
        raise EmptyCandidateSetError(f"no candidate lies within +/-{a_range}")
    signs = np.concatenate(signs)
    windings = np.concatenate(windings)
    dist = np.abs(cand - a_c)
    # lexsort: last key is primary
    order = np.lexsort((signs != 1, np.abs(cand), dist))
    best = order[0]
    return UnwrapResult(
        a_f=float(cand[best]),
        branch=BranchParams(int(signs[best]), int(windings[best])),
        residual=float(dist[best]),
    )


def apply_fusion_noise(
    qcfg: QuantumSensorConfig, result: UnwrapResult, mode, rng: np.random.Generator
) -> UnwrapResult:
    """Attach the fused measurement ``a_out``.

    In acceleration-domain mode ``a_out = a_f + nu_f`` with
    ``nu_f ~ N(0, sigma_f^2)``. Signal-domain noise already entered through S,
    so that mode, like ``NONE``, returns ``a_out = a_f`` without drawing.
    """
    if NoiseMode.parse(mode) is NoiseMode.ACCELERATION:
        nu = shot_noise_sigma(qcfg) * float(rng.standard_normal())
        return replace(result, a_out=result.a_f + nu)
    return replace(result, a_out=result.a_f)


def convergence_check(a_out: float, a_f: float, epsilon: float) -> bool:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    return abs(a_out - a_f) <= epsilon


def fuse(
    qcfg: QuantumSensorConfig,
    fcfg: FusionConfig,
    S: float,
    a_c: float,
    rng: np.random.Generator,
) -> UnwrapResult:
    """Unwrap, corrupt with fusion noise and run the convergence check."""
    result = apply_fusion_noise(qcfg, unwrap(qcfg, fcfg, S, a_c), fcfg.noise_mode, rng)
    ok = convergence_check(result.a_out, result.a_f, fcfg.epsilon(qcfg))
    return replace(result, converged=ok)


def recalibrate(state: CalibrationState, a_c_raw: float, a_out: float, t: float) -> CalibrationState:
    """Reset the classical output so that it reads ``a_out`` at time ``t``."""
    if t < state.last_update:
        raise ValueError(f"recalibration time went backwards: {t} < {state.last_update}")
    return CalibrationState(correction=a_out - a_c_raw, last_update=t)


def candidate_gap(qcfg: QuantumSensorConfig, S: float) -> float:
    """Smallest spacing between distinct candidates for signal ``S``."""
    x = _normalised_asin(qcfg, S)
    adjacent = (math.pi - 2.0 * abs(x)) / qcfg.scale_factor
    same = TWO_PI / qcfg.scale_factor
    return min(adjacent, same) if adjacent > 0 else same
