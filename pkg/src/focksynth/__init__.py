"""Simulator for a Kerr-coupled ring-cavity Fock-state synthesizer."""

from .cavity import (
    CavityParams,
    CavityResponse,
    cavity_coefficients,
    cavity_response,
    fock_phase,
    resonant_numbers,
    sigma_abs_sq,
    sigma_argument,
)
from .errors import (
    DimensionMismatch,
    FockSynthError,
    InvalidParameter,
    InvalidState,
    NoClickProbability,
    NoResonance,
    NonMonotoneBracket,
    TargetOutOfRange,
    TruncationTooSmall,
)
from .fockspace import (
    DensityMatrix,
    FockTruncation,
    PureStateVector,
    coherent_coefficients,
    coherent_density_matrix,
    default_truncation,
    fidelity_to_pure,
    log_factorial,
    purity,
)
from .synthesizer import (
    ClickReport,
    SynthesizerParams,
    conditional_state,
    design_phase,
    detection_probability,
    equal_weight_amplitude,
    ideal_filter_prediction,
    pom_no_click_weight,
    tau_calibration,
)

__version__ = "0.1.0"
