"""Photon-number distribution inference with a bucket detector and thermal noise."""

__version__ = "0.1.0"

from .core import (
    DEFAULT_MAX_PHOTONS,
    DetectorSetting,
    MeasurementRecord,
    ParameterError,
    PhotonDistribution,
    PovmElement,
    coherent_state,
    fidelity,
    fock_state,
    no_click_probability,
    parse_state,
    thermal_no_click_probability,
    thermal_state,
)
from .povm import (
    NoiseDistribution,
    averaged_kernel,
    efficiency_kernel,
    empirical_averaged_kernel,
    gaussian_averaged_kernel,
    thermal_kernel,
)
from .reconstruct import (
    ReconstructionConfig,
    ReconstructionReport,
    em_step,
    error_bound,
    log_likelihood,
    predicted_error_bound,
    reconstruct,
)
from .simulator import (
    RandomWalkSpec,
    ShotLog,
    bin_shot_log,
    bin_slices,
    simulate_fixed,
    simulate_gaussian_noise,
    simulate_random_walk,
)

__all__ = [
    "DEFAULT_MAX_PHOTONS",
    "DetectorSetting",
    "MeasurementRecord",
    "ParameterError",
    "PhotonDistribution",
    "PovmElement",
    "coherent_state",
    "fidelity",
    "fock_state",
    "no_click_probability",
    "parse_state",
    "thermal_no_click_probability",
    "thermal_state",
    "NoiseDistribution",
    "averaged_kernel",
    "efficiency_kernel",
    "empirical_averaged_kernel",
    "gaussian_averaged_kernel",
    "thermal_kernel",
    "ReconstructionConfig",
    "ReconstructionReport",
    "em_step",
    "error_bound",
    "log_likelihood",
    "predicted_error_bound",
    "reconstruct",
    "RandomWalkSpec",
    "ShotLog",
    "bin_shot_log",
    "bin_slices",
    "simulate_fixed",
    "simulate_gaussian_noise",
    "simulate_random_walk",
]
