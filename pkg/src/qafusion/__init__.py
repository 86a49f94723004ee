"""Classical/quantum accelerometer fusion by maximum-likelihood phase unwrapping."""

__version__ = "0.1.0"

from .fusion import (
    BranchParams,
    CalibrationState,
    FusionConfig,
    UnwrapResult,
    apply_fusion_noise,
    brute_force_unwrap,
    candidate_acceleration,
    convergence_check,
    fuse,
    recalibrate,
    rough_winding_estimates,
    unwrap,
    unwrap_batch,
)
from .navsim import Mode, NavState, RunSeries, ScenarioConfig, generate_truth, integrate_step, run_scenario
from .quadrature import QuadraturePair, select_sensor, unwrap_quadrature
from .sensor_models import (
    ClassicalNoiseState,
    ClassicalSensorConfig,
    NoiseMode,
    QuantumSensorConfig,
    effective_wavenumber,
    phase_shift,
    quantum_signal,
    quantum_signal_noisy,
    sample_classical,
    shot_noise_sigma,
)
