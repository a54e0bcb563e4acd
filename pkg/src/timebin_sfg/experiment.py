"""End-to-end runs of the four measurements: spectrum, fringes, CHSH and tomography.

Each ``run_*`` function takes an :class:`ExperimentConfig` and returns a plain
result object; writing files is left to the command-line layer.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import stats

from .config import CountsTable, ExperimentConfig
from .entangle import (
    PHI_TILDE_PLUS,
    FringeFit,
    chsh_from_table,
    chsh_probability_table,
    chsh_value,
    fit_fringe,
    fringe_scan,
    make_phi_plus,
    spawn_generators,
)
from .pulse import SpectralField, angular_to_wavelength, sample_field
from .sfg import (
    PeakDescriptor,
    SeparabilityReport,
    find_peak_centers,
    instrument_broadened,
    instrument_fwhm,
    middle_frequency,
    omega_width_to_wavelength,
    output_grid,
    peak_descriptors,
    peak_fwhm,
    regime_parameter,
    separability_bounds,
    sfg_analytic,
    sfg_numeric,
    sfg_rms_width,
    visibility_theoretical,
)
from .tomography import (
    ErrorEstimate,
    ReconstructionResult,
    build_36_set,
    expected_counts,
    fidelity,
    mle_reconstruct,
    monte_carlo_errors,
    purity,
    set_from_labels,
)

DEFAULT_IDLER_CURVES = ("D", "A", "L", "R")


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumResult:
    numeric: SpectralField
    analytic: SpectralField
    peaks: list[PeakDescriptor]
    side_displacement_numeric: float | None
    side_displacement_analytic: float | None
    resolved_peaks: int
    middle_fwhm: float
    middle_fwhm_broadened: float
    middle_fwhm_broadened_measured: float | None
    visibility: float
    bounds: SeparabilityReport
    runtime: float


def _side_displacement(field: SpectralField) -> tuple[float | None, int]:
    centers = find_peak_centers(field)
    if len(centers) != 3:
        return None, len(centers)
    lam = angular_to_wavelength(centers)
    return float(np.mean(np.abs(lam[[0, 2]] - lam[1]))), 3


def run_spectrum(config: ExperimentConfig) -> SpectrumResult:
    """Numeric and analytic SFG spectra plus the derived peak geometry."""
    t0 = time.perf_counter()
    photon, pump = config.photon, config.pump
    peaks = peak_descriptors(photon, pump)
    g1, g2, g3 = output_grid(photon, pump)
    numeric = sfg_numeric(sample_field(photon, g1), sample_field(pump, g2), g3)
    analytic = sfg_analytic(photon, pump, g3)
    disp_n, n_peaks = _side_displacement(numeric)
    disp_a, _ = _side_displacement(analytic)

    middle = next(p for p in peaks if p.offset == 0)
    broadened = instrument_fwhm(middle.fwhm_wavelength, config.resolution)
    measured = None
    if config.resolution > 0:
        sigma3 = sfg_rms_width(photon, pump)
        half = abs(config.bin_spacing) / (4.0 * photon.chirp) if config.bin_spacing else 40.0 * sigma3
        intensity = instrument_broadened(numeric, config.resolution, middle.central_wavelength)
        try:
            width = peak_fwhm(numeric.omega, intensity, middle_frequency(photon, pump), half)
            measured = omega_width_to_wavelength(width, middle.central_angular_frequency)
        except ValueError:
            measured = None
    return SpectrumResult(
        numeric=numeric,
        analytic=analytic,
        peaks=peaks,
        side_displacement_numeric=disp_n,
        side_displacement_analytic=disp_a,
        resolved_peaks=n_peaks,
        middle_fwhm=middle.fwhm_wavelength,
        middle_fwhm_broadened=broadened,
        middle_fwhm_broadened_measured=measured,
        visibility=visibility_theoretical(photon, pump),
        bounds=separability_bounds(photon, pump),
        runtime=time.perf_counter() - t0,
    )


def run_bounds(config: ExperimentConfig) -> tuple[SeparabilityReport, float]:
    """Separability window and the A^2 sigma^4 regime figure."""
    return separability_bounds(config.photon, config.pump), regime_parameter(config.photon, config.pump)


# ---------------------------------------------------------------------------
# fringes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FringeCurve:
    idler: str
    coincidences: np.ndarray
    singles: np.ndarray
    fit: FringeFit
    singles_fit: FringeFit
    singles_chi2: float
    singles_p_value: float


@dataclass(frozen=True)
class FringeResult:
    betas: np.ndarray
    curves: tuple[FringeCurve, ...]
    seed: int | None

    @property
    def mean_visibility(self) -> float:
        return float(np.mean([c.fit.visibility for c in self.curves]))


def _flatness(values: np.ndarray) -> tuple[float, float]:
    """Chi-square of Poisson data about its mean, and the matching p-value."""
    mean = values.mean()
    if mean <= 0:
        return 0.0, 1.0
    chi2 = float(np.sum((values - mean) ** 2) / mean)
    return chi2, float(stats.chi2.sf(chi2, len(values) - 1))


def run_fringe(config: ExperimentConfig, idlers: Sequence[str] = DEFAULT_IDLER_CURVES,
               beta_steps: int = 24, noiseless: bool = False) -> FringeResult:
    """Scan the pump phase for each idler analyser and fit every coincidence curve.

    Noiseless runs report expected counts; otherwise each curve draws
    Poisson coincidences and signal singles from its own seeded stream.
    """
    state = make_phi_plus(config.noise.fringe_visibility)
    betas = 2.0 * math.pi * np.arange(beta_steps) / beta_steps
    scan = fringe_scan(state, list(idlers), betas + config.beta_offset, config.bin_spacing)
    mean = config.noise.counts_per_setting_mean
    streams = spawn_generators(config.noise.seed, len(idlers))
    curves = []
    for i, label in enumerate(idlers):
        coinc = scan.coincidences[i] * mean
        singles = scan.singles[i] * mean
        if noiseless:
            fit = fit_fringe(betas, coinc)
            sfit = fit_fringe(betas, singles)
        else:
            coinc = streams[i].poisson(coinc).astype(float)
            singles = streams[i].poisson(singles).astype(float)
            fit = fit_fringe(betas, coinc, variances=np.maximum(coinc, 1.0))
            sfit = fit_fringe(betas, singles, variances=np.maximum(singles, 1.0))
        chi2, p = _flatness(singles) if not noiseless else (0.0, 1.0)
        curves.append(FringeCurve(label, coinc, singles, fit, sfit, chi2, p))
    return FringeResult(betas, tuple(curves), None if noiseless else config.noise.seed)


# ---------------------------------------------------------------------------
# CHSH
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChshResult:
    phases: tuple[float, float, float, float]
    s_ideal: float
    s_measured: float | None
    s_mean: float | None
    s_std: float | None
    resamples: int
    seed: int | None
    counts: np.ndarray | None = field(default=None, repr=False)

    @property
    def violation(self) -> bool:
        return (self.s_measured if self.s_measured is not None else self.s_ideal) > 2.0

    @property
    def sigmas(self) -> float | None:
        if self.s_measured is None or not self.s_std:
            return None
        return (self.s_measured - 2.0) / self.s_std


def run_chsh(config: ExperimentConfig, phases: Sequence[float] | None = None,
             noiseless: bool = False, resamples: int = 400) -> ChshResult:
    """CHSH parameter for the configured state, with Poisson spread over ``resamples`` runs."""
    xi_a, xi_a2, zeta_b, zeta_b2 = phases if phases is not None else config.chsh_phases
    zeta_b += config.zeta_offset
    zeta_b2 += config.zeta_offset
    used = (xi_a, xi_a2, zeta_b, zeta_b2)
    state = make_phi_plus(config.noise.fringe_visibility)
    ideal = chsh_value(state, *used)
    if noiseless:
        return ChshResult(used, ideal, None, None, None, 0, None)
    table = chsh_probability_table(state, *used) * config.noise.counts_per_setting_mean
    draws, values = [], []
    for rng in spawn_generators(config.noise.seed, max(resamples, 2)):
        counts = rng.poisson(table)
        draws.append(counts)
        values.append(chsh_from_table(counts))
    values = np.array(values)
    return ChshResult(used, ideal, float(values[0]), float(values.mean()), float(values.std(ddof=1)),
                      len(values), config.noise.seed, draws[0])


# ---------------------------------------------------------------------------
# tomography
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TomographyResult:
    labels: tuple[tuple[str, str], ...]
    counts: np.ndarray
    reconstruction: ReconstructionResult
    fidelity: float
    purity: float
    fidelity_error: ErrorEstimate | None
    purity_error: ErrorEstimate | None
    seed: int | None


def simulate_tomography_counts(config: ExperimentConfig, noiseless: bool = False) -> CountsTable:
    """Counts for the 36 settings from the phase-damped state at the configured visibility."""
    state = make_phi_plus(config.noise.fringe_visibility)
    actual = build_36_set(signal_phase_offset=config.beta_offset)
    mean = expected_counts(state.rho, actual, config.noise.counts_per_setting_mean)
    mean = np.clip(mean, 0.0, None)
    if noiseless:
        counts = mean
    else:
        counts = np.random.default_rng(config.noise.seed).poisson(mean).astype(float)
    return CountsTable(actual.labels, counts)


def run_tomography(config: ExperimentConfig, table: CountsTable, resamples: int = 400,
                   seed: int | None = None) -> TomographyResult:
    tset = set_from_labels(table.labels)
    result = mle_reconstruct(table.counts, tset)
    seed = config.noise.seed if seed is None else seed
    fid_err = pur_err = None
    if resamples >= 2:
        fid_err = monte_carlo_errors(table.counts, tset, "fidelity", resamples, seed)
        pur_err = monte_carlo_errors(table.counts, tset, "purity", resamples, seed)
    return TomographyResult(
        labels=table.labels,
        counts=table.counts,
        reconstruction=result,
        fidelity=fidelity(result.rho, PHI_TILDE_PLUS),
        purity=purity(result.rho),
        fidelity_error=fid_err,
        purity_error=pur_err,
        seed=seed if resamples >= 2 else None,
    )
