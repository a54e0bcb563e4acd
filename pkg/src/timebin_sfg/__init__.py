"""Chirped-pulse sum-frequency measurement of time-bin qubits and qudits."""

__version__ = "0.1.0"

from .pulse import (
    ChirpedPulseSpec,
    FrequencyGrid,
    GridCoverageError,
    QuditState,
    SpectralField,
    angular_to_wavelength,
    fwhm_wavelength_to_sigma,
    qubit_spec,
    qubit_state,
    sample_field,
    wavelength_to_angular,
)
from .sfg import (
    ChirpMismatchError,
    PeakDescriptor,
    QuadratureWarning,
    RegimeError,
    RegimeWarning,
    SeparabilityReport,
    output_grid,
    peak_descriptors,
    separability_bounds,
    sfg_analytic,
    sfg_numeric,
    visibility_theoretical,
)
from .measurement import (
    MonochromatorWindow,
    ProjectorSpec,
    middle_peak_probability,
    projection_probability,
    spectral_middle_peak_probability,
    time_bin_projector,
)
from .entangle import (
    MeasurementSetting,
    NoiseModel,
    TwoQubitState,
    chsh_value,
    coincidence_probability,
    fit_fringe,
    fringe_scan,
    make_phi_plus,
)
from .tomography import (
    ReconstructionResult,
    TomographySet,
    build_36_set,
    fidelity,
    mle_reconstruct,
    monte_carlo_errors,
    purity,
)
from .config import ConfigError, ExperimentConfig, load_config

__all__ = [name for name in dir() if not name.startswith("_")]
