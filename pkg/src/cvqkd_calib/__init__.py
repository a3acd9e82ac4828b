"""Shot-noise-unit calibration models and secret key rates for Gaussian
continuous-variable QKD.

The package builds the entanglement-based covariance matrices of the
conventional two-time calibration model and of the one-time two-mode and
three-mode models, evaluates secret key rates under collective attacks in
the asymptotic and finite-size regimes, and simulates the calibration
statistics themselves.
"""

from .calibration import (
    CalibrationEstimate,
    CalibrationMethod,
    NoiseGroundTruth,
    confidence_interval_ote,
    confidence_interval_tte,
    deviation_curve,
    estimate_variance,
    sample_homodyne,
    z_quantile,
)
from .gaussian import (
    CovarianceMatrix,
    MeasurementBasis,
    NumericalError,
    SymplecticSpectrum,
    apply_beamsplitter,
    attach_vacuum,
    condition_on_homodyne,
    entropy_g,
    is_physical,
    keep_modes,
    symplectic_eigenvalues,
    symplectic_form,
)
from .keyrate import (
    FiniteSizeParams,
    KeyRateResult,
    Regime,
    finite_size_penalty,
    holevo_bound,
    holevo_conventional,
    holevo_three_mode,
    holevo_two_mode,
    key_rate_asymptotic,
    key_rate_finite,
    mutual_information,
    mutual_information_from_matrix,
)
from .models import (
    ALPHA_DB_PER_KM,
    CalibrationModel,
    DetectorSplit,
    SnuScenario,
    SystemParams,
    apply_miscalibration,
    build_conventional,
    build_three_mode,
    build_two_mode,
    channel_output_matrix,
    conventional_channel_matrix,
    epr_state,
    eta_e_from_noise,
    snu_ote,
    snu_tte,
    transmittance_from_km,
    worst_case_split,
)

__version__ = "0.1.0"

__all__ = [
    "ALPHA_DB_PER_KM",
    "CalibrationEstimate",
    "CalibrationMethod",
    "CalibrationModel",
    "CovarianceMatrix",
    "DetectorSplit",
    "FiniteSizeParams",
    "KeyRateResult",
    "MeasurementBasis",
    "NoiseGroundTruth",
    "NumericalError",
    "Regime",
    "SnuScenario",
    "SymplecticSpectrum",
    "SystemParams",
    "apply_beamsplitter",
    "apply_miscalibration",
    "attach_vacuum",
    "build_conventional",
    "build_three_mode",
    "build_two_mode",
    "channel_output_matrix",
    "condition_on_homodyne",
    "confidence_interval_ote",
    "confidence_interval_tte",
    "conventional_channel_matrix",
    "deviation_curve",
    "entropy_g",
    "epr_state",
    "estimate_variance",
    "eta_e_from_noise",
    "finite_size_penalty",
    "holevo_bound",
    "holevo_conventional",
    "holevo_three_mode",
    "holevo_two_mode",
    "is_physical",
    "keep_modes",
    "key_rate_asymptotic",
    "key_rate_finite",
    "mutual_information",
    "mutual_information_from_matrix",
    "sample_homodyne",
    "snu_ote",
    "snu_tte",
    "symplectic_eigenvalues",
    "symplectic_form",
    "transmittance_from_km",
    "worst_case_split",
    "z_quantile",
]
