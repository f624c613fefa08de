"""Real-time state monitoring of a noisy driven qubit by sequential unsharp measurements."""

__version__ = "0.1.0"

__all__ = [
    "BlochVector", "DriveConfig", "EnsembleConfig", "FidelityCurveFit", "KrausPair", "MeasurementConfig",
    "NoiseSpec", "NoiseTrajectory", "PureState", "RunConfig", "RunRecord", "StepControl", "SweepConfig",
    "SweepPoint", "apply_measurement", "autocorrelation", "baseline_decay_metrics", "bloch_of", "build_kraus",
    "empirical_spectrum", "ensemble_average", "evaluate", "fidelity", "fit_fidelity", "measurement_strength",
    "outcome_probability", "pauli_along", "propagate_noiseless", "propagate_noisy", "rotation", "run_baseline",
    "run_single", "sample_outcome", "sweep_strength", "synthesize",
]

from .qubit import BlochVector, PureState, bloch_of, fidelity, pauli_along, rotation  # noqa: E402
from .povm import (  # noqa: E402
    KrausPair,
    MeasurementConfig,
    apply_measurement,
    build_kraus,
    measurement_strength,
    outcome_probability,
    sample_outcome,
)
from .noise import NoiseSpec, NoiseTrajectory, autocorrelation, empirical_spectrum, evaluate, synthesize  # noqa: E402
from .dynamics import DriveConfig, StepControl, propagate_noiseless, propagate_noisy  # noqa: E402
from .monitor import RunConfig, RunRecord, run_baseline, run_single  # noqa: E402
from .analysis import FidelityCurveFit, baseline_decay_metrics, fit_fidelity  # noqa: E402
from .experiment import EnsembleConfig, SweepConfig, SweepPoint, ensemble_average, sweep_strength  # noqa: E402
