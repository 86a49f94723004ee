import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qafusion.fusion import (
    BranchParams,
    CalibrationState,
    EmptyCandidateSetError,
    FusionConfig,
    SignalRangeError,
    UnwrapResult,
    apply_fusion_noise,
    brute_force_unwrap,
    candidate_acceleration,
    candidate_gap,
    convergence_check,
    fuse,
    recalibrate,
    round_half_away,
    rough_winding_estimates,
    unwrap,
    unwrap_batch,
)
from qafusion.sensor_models import NoiseMode, QuantumSensorConfig, quantum_signal, shot_noise_sigma

from .conftest import FRINGE

N = 1000.0


@pytest.mark.parametrize(
    "S, sign, n, expected",
    [
        (0.0, 1, 0, 0.0),
        (0.0, 1, 1, 0.39),
        (500.0, 1, 0, 0.0325),
        (500.0, 1, 1, 0.4225),
        (500.0, -1, 0, 0.1625),
        (0.0, -1, 0, 0.195),
        (0.0, -1, -1, -0.195),
    ],
)
def test_candidate_acceleration(qcfg, S, sign, n, expected):
    assert candidate_acceleration(qcfg, S, BranchParams(sign, n)) == pytest.approx(expected, abs=1e-12)


def test_candidate_inverts_signal_for_any_phase():
    for phi0 in (0.0, 0.3, math.pi / 2, -2.0):
        cfg = QuantumSensorConfig(initial_phase=phi0)
        for S in (-1000.0, -321.0, 0.0, 500.0, 999.0):
            for branch in (BranchParams(1, 3), BranchParams(-1, -2)):
                a = candidate_acceleration(cfg, S, branch)
                assert quantum_signal(cfg, a) == pytest.approx(S, abs=1e-9 * N)


def test_candidate_rejects_out_of_range(qcfg):
    with pytest.raises(SignalRangeError):
        candidate_acceleration(qcfg, 1000.5, BranchParams(1, 0))
    with pytest.raises(SignalRangeError):
        unwrap(qcfg, FusionConfig(), -1001.0, 0.0)


def test_branch_sign_validated():
    with pytest.raises(ValueError):
        BranchParams(0, 1)


def test_round_half_away():
    np.testing.assert_array_equal(
        round_half_away(np.array([-1.5, -0.5, -0.49, 0.0, 0.5, 1.5, 2.5])),
        [-2, -1, 0, 0, 1, 2, 3],
    )


@pytest.mark.parametrize(
    "S, a_c, expected",
    [
        (0.0, 0.0, (0, -1)),
        (0.0, 0.39, (1, 0)),
        (500.0, 0.0325, (0, 0)),
    ],
)
def test_rough_winding_estimates(qcfg, S, a_c, expected):
    assert rough_winding_estimates(qcfg, S, a_c) == expected


@pytest.mark.parametrize(
    "S, a_c, expected",
    [
        (0.0, 0.01, 0.0),
        (1000.0, 0.10, 0.0975),
        (500.0, 0.42, 0.4225),
        (0.0, 0.0, 0.0),
    ],
)
def test_unwrap_examples(qcfg, fcfg, S, a_c, expected):
    result = unwrap(qcfg, fcfg, S, a_c)
    assert result.a_f == pytest.approx(expected, abs=1e-12)
    assert result.residual == pytest.approx(abs(expected - a_c), abs=1e-12)
    assert result.a_out == result.a_f


def test_unwrap_tie_prefers_small_magnitude_then_plus(qcfg, fcfg):
    # S = 0: candidates ... -0.195, 0, 0.195 ...; a_c midway between 0 and 0.195
    r = unwrap(qcfg, fcfg, 0.0, 0.0975)
    assert r.a_f == 0.0 and r.branch == BranchParams(1, 0)
    # S = N: both branches give 0.0975 up to rounding; +1 branch taken
    r = unwrap(qcfg, fcfg, 1000.0, 0.0975)
    assert r.branch.sign == 1


def test_unwrap_rejects_nonfinite(qcfg, fcfg):
    with pytest.raises(ValueError):
        unwrap(qcfg, fcfg, 0.0, math.nan)


def test_round_trip_identity(qcfg, fcfg):
    rng = np.random.default_rng(5)
    for a in rng.uniform(-1e3, 1e3, 2000):
        r = unwrap(qcfg, fcfg, quantum_signal(qcfg, a), a)
        assert r.a_f == pytest.approx(a, rel=1e-9)
        assert quantum_signal(qcfg, r.a_f) == pytest.approx(quantum_signal(qcfg, a), abs=1e-9 * N)


def test_oracle_equivalence_sample(qcfg, fcfg):
    rng = np.random.default_rng(6)
    for a, delta in zip(rng.uniform(-1e3, 1e3, 500), rng.uniform(-0.05, 0.05, 500)):
        S = quantum_signal(qcfg, a)
        fast = unwrap(qcfg, fcfg, S, a + delta)
        slow = brute_force_unwrap(qcfg, S, a + delta, 1001.0)
        assert (fast.a_f, fast.branch) == (slow.a_f, slow.branch)


@pytest.mark.parametrize(
    "S, a_c, expected",
    [(0.0, 0.0, 0.0), (500.0, 0.42, 0.4225)],
)
def test_brute_force_examples(qcfg, S, a_c, expected):
    assert brute_force_unwrap(qcfg, S, a_c, 5.0).a_f == pytest.approx(expected, abs=1e-12)


def test_brute_force_validation(qcfg):
    with pytest.raises(ValueError):
        brute_force_unwrap(qcfg, 0.0, 0.0, 0.0)
    with pytest.raises(EmptyCandidateSetError):
        brute_force_unwrap(qcfg, 500.0, 0.0, 0.01)


@settings(max_examples=300, deadline=None)
@given(st.floats(-N, N), st.floats(-1e3, 1e3))
def test_residual_bound(S, a_c):
    cfg = QuantumSensorConfig()
    r = unwrap(cfg, FusionConfig(), S, a_c)
    assert 0 <= r.residual <= math.pi / cfg.scale_factor + 1e-12


def test_selection_robustness_grid(qcfg, fcfg):
    scale = qcfg.scale_factor
    failures = 0
    for S in np.linspace(-N, N, 41):
        x = math.asin(S / N)
        g_min = min((math.pi - 2 * abs(x)) / scale, 2 * math.pi / scale)
        if g_min <= 0:
            continue
        assert candidate_gap(qcfg, S) == pytest.approx(g_min)
        for branch in (BranchParams(1, 7), BranchParams(-1, -3), BranchParams(1, 0)):
            a = candidate_acceleration(qcfg, S, branch)
            for frac in np.linspace(-0.99, 0.99, 21):
                r = unwrap(qcfg, fcfg, S, a + frac * g_min / 2)
                failures += r.a_f != a
    assert failures == 0


def test_unwrap_batch_matches_scalar(qcfg, fcfg):
    rng = np.random.default_rng(8)
    a = rng.uniform(-50, 50, 3000)
    a_c = a + rng.normal(0, 0.02, a.size)
    S = quantum_signal(qcfg, a)
    a_f, signs, windings = unwrap_batch(qcfg, fcfg, S, a_c)
    for k in range(a.size):
        r = unwrap(qcfg, fcfg, float(S[k]), float(a_c[k]))
        assert a_f[k] == pytest.approx(r.a_f, rel=1e-12, abs=1e-12)
    with pytest.raises(SignalRangeError):
        unwrap_batch(qcfg, fcfg, np.array([1001.0]), np.array([0.0]))


def test_fusion_config_validation():
    with pytest.raises(ValueError):
        FusionConfig(window_halfwidth=0)
    with pytest.raises(ValueError):
        FusionConfig(convergence_epsilon=0.0)
    assert FusionConfig(noise_mode="signal").noise_mode is NoiseMode.SIGNAL


def test_default_epsilon_is_four_sigma(qcfg):
    assert FusionConfig().epsilon(qcfg) == pytest.approx(4 * shot_noise_sigma(qcfg))
    assert FusionConfig(convergence_epsilon=0.1).epsilon(qcfg) == 0.1


# ------------------------------------------------------------ noise + check


def test_apply_fusion_noise_none(qcfg):
    r = UnwrapResult(a_f=0.25, branch=BranchParams(1, 0), residual=0.0)
    assert apply_fusion_noise(qcfg, r, NoiseMode.NONE, np.random.default_rng(0)).a_out == 0.25
    assert apply_fusion_noise(qcfg, r, NoiseMode.SIGNAL, np.random.default_rng(0)).a_out == 0.25


def test_apply_fusion_noise_std(qcfg):
    rng = np.random.default_rng(10)
    r = UnwrapResult(a_f=1.0, branch=BranchParams(1, 2), residual=0.0)
    noise = np.array([apply_fusion_noise(qcfg, r, "acceleration", rng).a_out - 1.0 for _ in range(100_000)])
    assert noise.std() == pytest.approx(shot_noise_sigma(qcfg), rel=0.02)
    assert noise.std() == pytest.approx(1.9628e-3, rel=0.02)


def test_convergence_check(qcfg):
    sigma = shot_noise_sigma(qcfg)
    eps = FusionConfig().epsilon(qcfg)
    assert convergence_check(1.0, 1.0, 1e-3)
    assert not convergence_check(1.0 + 2e-3, 1.0, 1e-3)
    assert convergence_check(3 * sigma, 0.0, eps)
    with pytest.raises(ValueError):
        convergence_check(0.0, 0.0, 0.0)


def test_fuse_sets_converged(qcfg):
    r = fuse(qcfg, FusionConfig(noise_mode="acceleration"), 500.0, 0.03, np.random.default_rng(1))
    assert r.converged
    tight = FusionConfig(convergence_epsilon=1e-12)
    r = fuse(qcfg, tight, 500.0, 0.03, np.random.default_rng(1))
    assert not r.converged


# ------------------------------------------------------------ recalibration


def test_recalibrate_arithmetic():
    state = recalibrate(CalibrationState(), a_c_raw=1.002, a_out=1.000, t=1.0)
    assert state.correction == pytest.approx(-0.002)
    assert state.apply(1.003) == pytest.approx(1.001)
    assert recalibrate(CalibrationState(), 0.5, 0.5, 1.0).correction == 0.0


def test_recalibrate_idempotent_and_monotone():
    s1 = recalibrate(CalibrationState(), 1.0, 0.9, 2.0)
    assert recalibrate(s1, 1.0, 0.9, 2.0) == s1
    with pytest.raises(ValueError):
        recalibrate(s1, 1.0, 0.9, 1.0)


def test_bias_cancelled_after_one_update(qcfg, fcfg):
    bias = 2e-3
    cal = CalibrationState()
    a = 3.7
    raw = a + bias
    r = unwrap(qcfg, fcfg, quantum_signal(qcfg, a), cal.apply(raw))
    cal = recalibrate(cal, raw, r.a_out, 1.0)
    assert cal.apply(-1.2 + bias) == pytest.approx(-1.2, abs=1e-12)
