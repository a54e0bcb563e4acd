"""Projective time-bin measurements implemented by a shaped pump pulse.

The middle SFG peak collects every photon bin j upconverted by the pump bin
of the same index.  Its integrated intensity is

    I_M = sum_{j,k} exp[-(j-k)^2 sigma_3^2 tau^2 / 2] exp[i (j-k) w03 tau]
                    c_k^* d_k^* c_j d_j

which, as sigma_3 tau -> 0, is |<Lambda|psi>|^2 for the projector with
coefficients x_j = d_j^* exp(-i j w03 tau).  The constant phase w03 tau is
absorbed into the projector, so phases quoted for projectors are always the
post-absorption values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pulse import (
    ChirpedPulseSpec,
    NORM_TOL,
    QuditState,
    SpectralField,
    angular_to_wavelength,
    sample_field,
    wavelength_to_angular,
)
from .sfg import check_regime, middle_frequency, output_grid, sfg_numeric, sfg_rms_width

DEFAULT_WINDOW_WIDTH = 0.11e-9


@dataclass(frozen=True)
class ProjectorSpec:
    """Time-bin projector sum_j x_j |t_j>.

    ``phase_reference`` records the constant w03 tau already absorbed into the
    coefficients (zero for projectors defined directly).
    """

    coefficients: tuple[complex, ...]
    bin_spacing: float
    phase_reference: float = 0.0

    def __post_init__(self):
        coeffs = tuple(complex(x) for x in self.coefficients)
        norm = sum(abs(x) ** 2 for x in coeffs)
        if not coeffs or abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"projector coefficients must be normalized, sum |x|^2 = {norm!r}")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def dimension(self) -> int:
        return len(self.coefficients)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=complex)

    def as_state(self) -> QuditState:
        return QuditState(self.coefficients, self.bin_spacing)


@dataclass(frozen=True)
class MonochromatorWindow:
    """Hard-edged spectral passband, both quantities in metres."""

    center_wavelength: float
    width: float = DEFAULT_WINDOW_WIDTH

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"window width must be positive, got {self.width!r}")
        if not self.center_wavelength > self.width / 2:
            raise ValueError("window must lie at positive wavelengths")

    @property
    def omega_range(self) -> tuple[float, float]:
        half = self.width / 2.0
        return (wavelength_to_angular(self.center_wavelength + half),
                wavelength_to_angular(self.center_wavelength - half))


def time_bin_projector(phase: float, bin_spacing: float) -> ProjectorSpec:
    """Equal superposition (|e> + e^{i phase} |l>) / sqrt 2."""
    s = 1.0 / math.sqrt(2.0)
    return ProjectorSpec((s, s * np.exp(1j * phase)), bin_spacing)


def projector_from_pulse(pump: ChirpedPulseSpec, omega03: float) -> ProjectorSpec:
    """Projector implemented by ``pump`` when the middle peak sits at ``omega03``."""
    tau = pump.bin_spacing
    x = [np.conj(d) * np.exp(-1j * j * omega03 * tau) for j, d in enumerate(pump.coefficients)]
    return ProjectorSpec(tuple(x), tau, phase_reference=omega03 * tau)


def pump_for_projector(base: ChirpedPulseSpec, coefficients: Sequence[complex],
                       omega03: float) -> ChirpedPulseSpec:
    """Pump bin amplitudes d_j = x_j^* exp(-i j w03 tau) realising projector ``x``."""
    tau = base.bin_spacing
    d = [np.conj(x) * np.exp(-1j * j * omega03 * tau) for j, x in enumerate(coefficients)]
    return base.with_coefficients(d)


def projection_probability(state: QuditState, proj: ProjectorSpec) -> float:
    """|<Lambda|psi>|^2."""
    if state.dimension != proj.dimension:
        raise ValueError(f"dimension mismatch: state {state.dimension}, projector {proj.dimension}")
    if not math.isclose(state.bin_spacing, proj.bin_spacing, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(f"bin spacing mismatch: {state.bin_spacing!r} vs {proj.bin_spacing!r}")
    amp = np.vdot(proj.vector, state.vector)
    return float(abs(amp) ** 2)


def _carrier(state: QuditState, photon: ChirpedPulseSpec) -> ChirpedPulseSpec:
    return ChirpedPulseSpec(photon.center, photon.sigma, photon.chirp, photon.delay,
                            state.bin_spacing, state.coefficients)


def middle_peak_probability(state: QuditState, pump: ChirpedPulseSpec,
                            photon: ChirpedPulseSpec) -> float:
    """Integrated middle-peak intensity with finite peak width.

    ``photon`` supplies the envelope (centre, bandwidth, chirp, delay) that the
    state's bins ride on; its own coefficients are ignored.  The value is
    normalized so that a matched pure state gives 1 in the sigma_3 tau -> 0
    limit.
    """
    if state.dimension != pump.dimension:
        raise ValueError(f"dimension mismatch: state {state.dimension}, pump {pump.dimension}")
    if not math.isclose(state.bin_spacing, pump.bin_spacing, rel_tol=1e-12, abs_tol=0.0):
        raise ValueError(f"bin spacing mismatch: {state.bin_spacing!r} vs {pump.bin_spacing!r}")
    carrier = _carrier(state, photon)
    check_regime(carrier, pump)
    tau = state.bin_spacing
    sigma3 = sfg_rms_width(carrier, pump)
    omega03 = middle_frequency(carrier, pump)
    a = state.vector * np.array(pump.coefficients)
    j = np.arange(state.dimension)
    dj = j[:, None] - j[None, :]
    kernel = np.exp(-(dj**2) * (sigma3 * tau) ** 2 / 2.0) * np.exp(1j * dj * omega03 * tau)
    return float(np.real(np.einsum("j,jk,k->", a, kernel, np.conj(a))))


def window_integrate(spectrum: SpectralField, window: MonochromatorWindow) -> float:
    """Integral of |E|^2 dw across the passband, with linear interpolation at the edges."""
    lo, hi = window.omega_range
    grid = spectrum.grid
    slack = 1e-12 * hi
    if lo < grid.start - slack or hi > grid.stop + slack:
        raise ValueError(
            f"window [{lo:.6e}, {hi:.6e}] rad/s lies outside grid [{grid.start:.6e}, {grid.stop:.6e}]"
        )
    lo, hi = max(lo, grid.start), min(hi, grid.stop)
    w = spectrum.omega
    p = spectrum.intensity
    inner = (w > lo) & (w < hi)
    x = np.concatenate(([lo], w[inner], [hi]))
    y = np.concatenate(([np.interp(lo, w, p)], p[inner], [np.interp(hi, w, p)]))
    return float(np.trapezoid(y, x))


def middle_window(photon: ChirpedPulseSpec, pump: ChirpedPulseSpec,
                  width: float = DEFAULT_WINDOW_WIDTH) -> MonochromatorWindow:
    return MonochromatorWindow(angular_to_wavelength(middle_frequency(photon, pump)), width)


def spectral_middle_peak_probability(state: QuditState, pump: ChirpedPulseSpec,
                                     photon: ChirpedPulseSpec,
                                     window: MonochromatorWindow | None = None) -> float:
    """Middle-peak probability read off a simulated spectrum.

    Runs :func:`sfg_numeric` on unnormalized output and integrates the
    monochromator window, then divides by the same window for the reference
    pair (photon and pump both in the first bin alone), whose probability is 1.
    """
    carrier = _carrier(state, photon)
    check_regime(carrier, pump)
    if window is None:
        window = middle_window(carrier, pump)
    g1, g2, g3 = output_grid(carrier, pump)
    first = tuple(1.0 if j == 0 else 0.0 for j in range(state.dimension))

    def windowed(c, d):
        e1 = sample_field(carrier.with_coefficients(c), g1)
        e2 = sample_field(pump.with_coefficients(d), g2)
        return window_integrate(sfg_numeric(e1, e2, g3, normalize=False, check_convergence=False), window)

    return windowed(state.coefficients, pump.coefficients) / windowed(first, first)
