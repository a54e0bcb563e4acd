"""Sum-frequency spectra of a chirped photon mixed with an anti-chirped pump.

Two independent routes are provided.  :func:`sfg_numeric` evaluates the
first-order upconversion integral

    E3(w3) = integral dw1 E1(w1) E_pump(w3 - w1)

by direct trapezoid quadrature over sampled fields, with no large-chirp
assumption.  :func:`sfg_analytic` sums the closed-form Gaussian peaks that the
integral reduces to when A^2 sigma^4 >> 1.  The remaining functions describe
the resulting peaks: centres, widths, relative weights, fringe visibility and
the window of bin spacings for which the peaks are both resolvable and
mutually coherent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .pulse import (
    COVERAGE_SIGMAS,
    FWHM_PER_SIGMA,
    SPEED_OF_LIGHT,
    ChirpedPulseSpec,
    FrequencyGrid,
    GridCoverageError,
    SpectralField,
    angular_to_wavelength,
    default_step,
    trapezoid_weights,
)

REGIME_ERROR_THRESHOLD = 10.0
REGIME_WARNING_THRESHOLD = 100.0
CONVERGENCE_RTOL = 1e-4
GRID_MATCH_RTOL = 1e-9


class RegimeError(ValueError):
    """Pulse parameters fall outside the large-chirp regime."""


class ChirpMismatchError(RegimeError):
    """Photon and pump chirps are not equal and opposite."""


class RegimeWarning(UserWarning):
    pass


class QuadratureWarning(UserWarning):
    """Numeric SFG quadrature changed by more than the tolerance under grid refinement."""


@dataclass(frozen=True)
class PeakDescriptor:
    label: str
    offset: int
    pairs: tuple[tuple[int, int], ...]
    central_angular_frequency: float
    central_wavelength: float
    rms_width: float
    fwhm_wavelength: float
    integrated_intensity: float


@dataclass(frozen=True)
class SeparabilityReport:
    lower_bound: float
    upper_bound: float
    tau: float
    separable: bool
    interferes: bool

    @property
    def valid(self) -> bool:
        return self.separable and self.interferes


# ---------------------------------------------------------------------------
# regime and geometry
# ---------------------------------------------------------------------------

def regime_parameter(photon: ChirpedPulseSpec, pump: ChirpedPulseSpec) -> float:
    """A^2 sigma_min^4, the large-chirp figure of merit."""
    sigma = min(photon.sigma, pump.sigma)
    return photon.chirp**2 * sigma**4


def check_regime(photon: ChirpedPulseSpec, pump: ChirpedPulseSpec) -> float:
    """Validate the opposite-chirp, large-chirp preconditions; return A.

    Raises :class:`ChirpMismatchError` unless ``photon.chirp = -pump.chirp > 0``
    and :class:`RegimeError` when A^2 sigma_min^4 <= 10.  Values up to 100 only
    warn.
    """
    a = photon.chirp
    if not a > 0:
        raise ChirpMismatchError(f"photon chirp must be positive, got {a!r}")
    if abs(a + pump.chirp) > GRID_MATCH_RTOL * a:
        raise ChirpMismatchError(f"pump chirp {pump.chirp!r} is not the negative of photon chirp {a!r}")
    if photon.bin_spacing != pump.bin_spacing and photon.dimension > 1 and pump.dimension > 1:
        raise ChirpMismatchError(
            f"photon and pump bin spacings differ ({photon.bin_spacing!r} vs {pump.bin_spacing!r})"
        )
    figure = regime_parameter(photon, pump)
    if figure <= REGIME_ERROR_THRESHOLD:
        raise RegimeError(f"A^2 sigma^4 = {figure:.3g} is not in the large-chirp regime (> {REGIME_ERROR_THRESHOLD:g})")
    if figure <= REGIME_WARNING_THRESHOLD:
        warnings.warn(f"A^2 sigma^4 = {figure:.3g} is only marginally large-chirp", RegimeWarning, stacklevel=2)
    return a


def _bin_spacing(photon: ChirpedPulseSpec, pump: ChirpedPulseSpec) -> float:
    if photon.dimension > 1:
        return photon.bin_spacing
    return pump.bin_spacing


def sfg_rms_width(photon: ChirpedPulseSpec, pump: ChirpedPulseSpec) -> float:
    """RMS width sigma_3 (rad/s) of every SFG peak."""
    a = abs(photon.chirp)
    return math.sqrt(1.0 / photon.sigma**2 + 1.0 / pump.sigma**2) / (4.0 * a)


def middle_frequency(photon: ChirpedPulseSpec, pump: ChirpedPulseSpec) -> float:
    """Centre of the middle peak, w01 + w02 + (pump delay - photon delay) / 2A."""
    return photon.center + pump.center + (pump.delay - photon.delay) / (2.0 * photon.chirp)


def _peak_label(offset: int, n_photon: int, n_pump: int) -> str:
    if offset == 0:
        return "MIDDLE"
    if n_photon == 2 and n_pump == 2:
        return "BLUE" if offset > 0 else "RED"
    return f"{offset:+d}"


def peak_descriptors(photon: ChirpedPulseSpec, pump: ChirpedPulseSpec) -> list[PeakDescriptor]:
    """Centres, widths and relative weights of the SFG peaks, red to blue.

    Photon bin j mixed with pump bin k lands on the peak with offset
    m = k - j, centred at w01 + w02 + (delay + m tau) / 2A.  Contributions
    sharing an offset interfere; their integrated weight carries the
    exp[-(j - j')^2 sigma_3^2 tau^2 / 2] coherence factor.  Weights are
    normalized to sum to one.
    """
    a = check_regime(photon, pump)
    tau = _bin_spacing(photon, pump)
    s1, s2 = photon.sigma, pump.sigma
    ssum = s1**2 + s2**2
    sigma3 = sfg_rms_width(photon, pump)
    base_delay = pump.delay - photon.delay
    c = np.array(photon.coefficients)
    d = np.array(pump.coefficients)
    n1, n2 = len(c), len(d)

    raw = []
    for m in range(-(n1 - 1), n2):
        pairs = tuple((j, j + m) for j in range(n1) if 0 <= j + m < n2)
        shift = base_delay + m * tau
        omega = photon.center + pump.center + shift / (2.0 * a)
        overlap = math.exp(-shift**2 / (8.0 * a**2 * ssum))
        weight = 0.0 + 0.0j
        for j, k in pairs:
            for jp, kp in pairs:
                dj = j - jp
                weight += (
                    c[j] * d[k] * np.conj(c[jp] * d[kp])
                    * math.exp(-(dj**2) * sigma3**2 * tau**2 / 2.0)
                    * np.exp(1j * dj * tau * omega)
                )
        raw.append((m, pairs, omega, overlap * weight.real))

    total = sum(r[3] for r in raw)
    peaks = []
    for m, pairs, omega, weight in raw:
        lam = angular_to_wavelength(omega)
        peaks.append(
            PeakDescriptor(
                label=_peak_label(m, n1, n2),
                offset=m,
                pairs=pairs,
                central_angular_frequency=omega,
                central_wavelength=lam,
                rms_width=sigma3,
                fwhm_wavelength=lam**2 / (2.0 * math.pi * SPEED_OF_LIGHT) * FWHM_PER_SIGMA * sigma3,
                integrated_intensity=float(weight / total) if total > 0 else 0.0,
            )
        )
    return peaks


def visibility_theoretical(photon: ChirpedPulseSpec, pump: ChirpedPulseSpec) -> float:
    """Ideal middle-peak fringe visibility exp(-sigma_3^2 tau^2 / 2)."""
    sigma3 = sfg_rms_width(photon, pump)
    tau = _bin_spacing(photon, pump)
    return math.exp(-(sigma3 * tau) ** 2 / 2.0)


def separability_bounds(photon: ChirpedPulseSpec, pump: ChirpedPulseSpec,
                        tau: float | None = None) -> SeparabilityReport:
    """Bin-spacing window: sqrt(1/s1^2 + 1/s2^2) < tau < 4A s1 s2 / sqrt(s1^2 + s2^2)."""
    s1, s2 = photon.sigma, pump.sigma
    a = abs(photon.chirp)
    if tau is None:
        tau = _bin_spacing(photon, pump)
    lower = math.sqrt(1.0 / s1**2 + 1.0 / s2**2)
    upper = 4.0 * a * s1 * s2 / math.sqrt(s1**2 + s2**2)
    return SeparabilityReport(lower, upper, tau, separable=tau > lower, interferes=tau < upper)


def instrument_fwhm(intrinsic_fwhm: float, resolution_fwhm: float) -> float:
    """FWHM of a Gaussian line after a Gaussian instrument response."""
    return math.hypot(intrinsic_fwhm, resolution_fwhm)


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

def output_grid(photon: ChirpedPulseSpec, pump: ChirpedPulseSpec,
                step: float | None = None) -> tuple[FrequencyGrid, FrequencyGrid, FrequencyGrid]:
    """Mutually commensurate photon, pump and output grids for :func:`sfg_numeric`.

    All three share one step (the finer of the two default steps), and the
    output grid starts at the sum of the input starts so that w3 - w1 always
    lands on a pump sample.  The output covers w01 + w02 +- 5 (s1 + s2).
    """
    if step is None:
        step = min(default_step(photon), default_step(pump))
    g1 = FrequencyGrid.for_spec(photon, step)
    g2 = FrequencyGrid.for_spec(pump, step)
    centre = photon.center + pump.center
    half = COVERAGE_SIGMAS * (photon.sigma + pump.sigma)
    start = g1.start + g2.start
    n_lo = math.floor((centre - half - start) / step)
    n_hi = math.ceil((centre + half - start) / step)
    g3 = FrequencyGrid(start + n_lo * step, step, n_hi - n_lo + 1)
    return g1, g2, g3


def _check_field_coverage(f: SpectralField, name: str) -> tuple[float, float]:
    centre, rms = f.moments()
    half = COVERAGE_SIGMAS * rms * 0.99
    if not f.grid.covers(centre - half, centre + half):
        raise GridCoverageError(f"{name} grid does not cover its centroid +- {COVERAGE_SIGMAS:g} RMS widths")
    return centre, rms


def _grid_offset(photon: FrequencyGrid, pump: FrequencyGrid, out: FrequencyGrid) -> int:
    h = photon.step
    for name, g in (("pump", pump), ("output", out)):
        if abs(g.step - h) > GRID_MATCH_RTOL * h:
            raise ValueError(f"{name} grid step {g.step!r} differs from photon grid step {h!r}")
    shift = (out.start - photon.start - pump.start) / h
    offset = round(shift)
    if abs(shift - offset) > 1e-6:
        raise ValueError("output grid is not aligned with photon + pump grid origins")
    return offset


def _convolve_trapezoid(e1: np.ndarray, e2: np.ndarray, step: float) -> np.ndarray:
    return np.convolve(e1 * trapezoid_weights(len(e1), step), e2)


def sfg_numeric(photon: SpectralField, pump: SpectralField, out_grid: FrequencyGrid, *,
                normalize: bool = True, check_convergence: bool = True) -> SpectralField:
    """Upconverted field by direct quadrature of the photon-pump convolution.

    The three grids must share one step and be aligned (see
    :func:`output_grid`), which makes every pump argument w3 - w1 an exact
    sample; pump values off its grid are taken as zero.  The sum is a direct
    O(M^2) discrete convolution with trapezoid end weights.

    With ``check_convergence`` the integral is repeated on every second sample
    and a :class:`QuadratureWarning` is issued when the output energy moves by
    more than 1e-4 relative.
    """
    c1, r1 = _check_field_coverage(photon, "photon")
    c2, r2 = _check_field_coverage(pump, "pump")
    half = COVERAGE_SIGMAS * (r1 + r2) * 0.99
    if not out_grid.covers(c1 + c2 - half, c1 + c2 + half):
        raise GridCoverageError(
            f"output grid [{out_grid.start:.6e}, {out_grid.stop:.6e}] rad/s does not cover "
            f"{c1 + c2:.6e} +- {half:.3e} rad/s"
        )
    offset = _grid_offset(photon.grid, pump.grid, out_grid)
    h = photon.grid.step

    full = _convolve_trapezoid(photon.amplitude, pump.amplitude, h)
    idx = offset + np.arange(out_grid.count)
    inside = (idx >= 0) & (idx < len(full))
    amplitude = np.zeros(out_grid.count, dtype=complex)
    amplitude[inside] = full[idx[inside]]

    if check_convergence:
        fine = np.trapezoid(np.abs(full) ** 2, dx=h)
        coarse_amp = _convolve_trapezoid(photon.amplitude[::2], pump.amplitude[::2], 2 * h)
        coarse = np.trapezoid(np.abs(coarse_amp) ** 2, dx=2 * h)
        change = abs(fine - coarse) / fine if fine > 0 else 0.0
        if change > CONVERGENCE_RTOL:
            warnings.warn(
                f"SFG quadrature not converged: output energy changes by {change:.2e} "
                f"between step {2 * h:.3e} and {h:.3e} rad/s",
                QuadratureWarning,
                stacklevel=2,
            )

    out = SpectralField(out_grid, amplitude)
    return out.normalized() if normalize else out


def _bin_times(spec: ChirpedPulseSpec) -> np.ndarray:
    return spec.delay + spec.bin_spacing * np.arange(spec.dimension)


def sfg_analytic(photon: ChirpedPulseSpec, pump: ChirpedPulseSpec, out_grid: FrequencyGrid, *,
                 normalize: bool = True) -> SpectralField:
    """Large-chirp closed form: one Gaussian term per (photon bin, pump bin) pair.

    With W = w3 - w01 - w02, photon bin j at time t_j and pump bin k at s_k,
    D = s_k - t_j and S = s1^2 + s2^2, the pair contributes

        c_j d_k exp[-4 A^2 s1^2 s2^2 / S (W - D / 2A)^2 - D^2 / (16 A^2 S)]
                exp[i (t_j w01 + s_k w02 + W s_k - W D s1^2 / S)]

    all multiplied by the residual chirp exp[i A W^2 (s1^2 - s2^2) / S].
    Unnormalized output carries the absolute scale implied by unit-norm input
    fields, so it is directly comparable with :func:`sfg_numeric`.
    """
    a = check_regime(photon, pump)
    s1, s2 = photon.sigma, pump.sigma
    ssum = s1**2 + s2**2
    w = out_grid.omega
    big_w = w - photon.center - pump.center
    narrow = 4.0 * a**2 * s1**2 * s2**2 / ssum

    amplitude = np.zeros_like(w, dtype=complex)
    for t_j, cj in zip(_bin_times(photon), photon.coefficients):
        if cj == 0:
            continue
        for s_k, dk in zip(_bin_times(pump), pump.coefficients):
            if dk == 0:
                continue
            shift = s_k - t_j
            magnitude = np.exp(-narrow * (big_w - shift / (2.0 * a)) ** 2 - shift**2 / (16.0 * a**2 * ssum))
            phase = t_j * photon.center + s_k * pump.center + big_w * s_k - big_w * shift * s1**2 / ssum
            amplitude += cj * dk * magnitude * np.exp(1j * phase)
    amplitude *= np.exp(1j * a * big_w**2 * (s1**2 - s2**2) / ssum)

    # unit-norm Gaussian inputs times the Gaussian integral over w1
    scale = (2.0 * math.pi * s1**2) ** -0.25 * (2.0 * math.pi * s2**2) ** -0.25
    scale *= 2.0 * s1 * s2 * math.sqrt(math.pi / ssum)
    out = SpectralField(out_grid, scale * amplitude)
    return out.normalized() if normalize else out


def l2_distance(a: SpectralField, b: SpectralField) -> float:
    """||a - b|| / max(||a||, ||b||) by trapezoid rule on a shared grid."""
    if a.grid != b.grid:
        raise ValueError("fields must share a grid")
    diff = SpectralField(a.grid, a.amplitude - b.amplitude).norm()
    return diff / max(a.norm(), b.norm())


# ---------------------------------------------------------------------------
# spectrum analysis
# ---------------------------------------------------------------------------

def instrument_broadened(field: SpectralField, resolution_fwhm_wavelength: float,
                         center_wavelength: float | None = None) -> np.ndarray:
    """Intensity spectrum convolved with a Gaussian instrument response.

    The response width is quoted as a wavelength FWHM and converted to angular
    frequency at ``center_wavelength`` (default: the spectrum centroid).
    Intensities, not amplitudes, are convolved; the total is preserved.
    """
    if center_wavelength is None:
        center_wavelength = angular_to_wavelength(field.moments()[0])
    sigma_w = (2.0 * math.pi * SPEED_OF_LIGHT * resolution_fwhm_wavelength
               / center_wavelength**2 / FWHM_PER_SIGMA)
    h = field.grid.step
    half = int(math.ceil(6.0 * sigma_w / h))
    x = h * np.arange(-half, half + 1)
    kernel = np.exp(-x**2 / (2.0 * sigma_w**2))
    kernel /= kernel.sum()
    return np.convolve(field.intensity, kernel, mode="same")


def find_peak_centers(field: SpectralField, rel_height: float = 0.05,
                      intensity: np.ndarray | None = None) -> np.ndarray:
    """Intensity-weighted centroids of the resolved peaks, ascending in frequency.

    A peak is a contiguous run of samples above ``rel_height`` times the
    maximum; each run is reduced to its centroid.
    """
    p = field.intensity if intensity is None else np.asarray(intensity)
    w = field.omega
    above = p >= rel_height * p.max()
    edges = np.flatnonzero(np.diff(above.astype(np.int8)))
    starts = list(edges[~above[edges]] + 1)
    stops = list(edges[above[edges]] + 1)
    if above[0]:
        starts.insert(0, 0)
    if above[-1]:
        stops.append(len(p))
    centers = [np.sum(w[s:e] * p[s:e]) / np.sum(p[s:e]) for s, e in zip(starts, stops)]
    return np.array(centers)


def peak_fwhm(omega: np.ndarray, intensity: np.ndarray, center: float, half_window: float) -> float:
    """FWHM (rad/s) of the peak nearest ``center``, by linear interpolation of half-max crossings."""
    sel = np.abs(omega - center) <= half_window
    w = omega[sel]
    p = intensity[sel]
    i = int(np.argmax(p))
    half = p[i] / 2.0
    lo = i
    while lo > 0 and p[lo] > half:
        lo -= 1
    hi = i
    while hi < len(p) - 1 and p[hi] > half:
        hi += 1
    if p[lo] > half or p[hi] > half:
        raise ValueError("peak does not fall to half maximum inside the window")
    left = w[lo] + (half - p[lo]) * (w[lo + 1] - w[lo]) / (p[lo + 1] - p[lo])
    right = w[hi - 1] + (half - p[hi - 1]) * (w[hi] - w[hi - 1]) / (p[hi] - p[hi - 1])
    return float(right - left)


def omega_width_to_wavelength(width: float, center_omega: float) -> float:
    """Convert a small angular-frequency interval to wavelength at ``center_omega``."""
    lam = angular_to_wavelength(center_omega)
    return lam**2 * width / (2.0 * math.pi * SPEED_OF_LIGHT)
