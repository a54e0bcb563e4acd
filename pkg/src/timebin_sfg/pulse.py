"""Analytic spectral fields for chirped time-bin photons and shaped pump pulses.

Every field in this package lives in the angular-frequency domain.  A pulse
with ``N`` time bins is

    E(w) = exp[-(w - w0)^2 / 4 sigma^2] exp[i A (w - w0)^2] exp[i w delay]
           * sum_j c_j exp[i j w tau]

where ``sigma`` is the RMS width of the *intensity* spectrum, ``A`` the
quadratic spectral phase (chirp) and ``tau`` the spacing between bins.  The
bin phases ``exp[i j w tau]`` are attached at sampling time and are not
folded into the coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
NORM_TOL = 1e-12
COVERAGE_SIGMAS = 5.0


class GridCoverageError(ValueError):
    """A frequency grid does not span the region a field occupies."""


def wavelength_to_angular(wavelength: float) -> float:
    """Angular frequency (rad/s) of a vacuum wavelength (m)."""
    if not wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {wavelength!r}")
    return 2.0 * math.pi * SPEED_OF_LIGHT / wavelength


def angular_to_wavelength(omega):
    """Vacuum wavelength (m) of an angular frequency; works elementwise."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("angular frequency must be positive")
    out = 2.0 * math.pi * SPEED_OF_LIGHT / omega
    return float(out) if out.ndim == 0 else out


def fwhm_wavelength_to_sigma(center_wavelength: float, fwhm_wavelength: float) -> float:
    """RMS intensity bandwidth (rad/s) from an intensity FWHM quoted in wavelength.

    A zero bandwidth is returned as zero; pulse specs reject it.
    """
    if not center_wavelength > 0:
        raise ValueError(f"wavelength must be positive, got {center_wavelength!r}")
    if fwhm_wavelength < 0:
        raise ValueError(f"bandwidth must be non-negative, got {fwhm_wavelength!r}")
    delta_omega = 2.0 * math.pi * SPEED_OF_LIGHT * fwhm_wavelength / center_wavelength**2
    return delta_omega / FWHM_PER_SIGMA


def sigma_to_fwhm_wavelength(center_wavelength: float, sigma: float) -> float:
    """Inverse of :func:`fwhm_wavelength_to_sigma`."""
    return center_wavelength**2 / (2.0 * math.pi * SPEED_OF_LIGHT) * FWHM_PER_SIGMA * sigma


def _normalized_tuple(coefficients: Sequence[complex], what: str) -> tuple[complex, ...]:
    coeffs = tuple(complex(x) for x in coefficients)
    if not coeffs:
        raise ValueError(f"{what} needs at least one coefficient")
    norm = sum(abs(x) ** 2 for x in coeffs)
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"{what} coefficients must be normalized, sum |c|^2 = {norm!r}")
    return coeffs


def normalize_coefficients(coefficients: Sequence[complex]) -> tuple[complex, ...]:
    arr = np.asarray(coefficients, dtype=complex)
    norm = np.linalg.norm(arr)
    if norm == 0:
        raise ValueError("cannot normalize an all-zero coefficient vector")
    return tuple(complex(x) for x in arr / norm)


@dataclass(frozen=True)
class ChirpedPulseSpec:
    """Gaussian (possibly chirped, possibly multi-bin) spectral field.

    Attributes:
        center: central angular frequency w0 (rad/s).
        sigma: RMS width of the intensity spectrum (rad/s).
        chirp: quadratic spectral phase A (s^2), any sign.
        delay: global time delay (s).
        bin_spacing: time between consecutive bins (s).
        coefficients: complex bin amplitudes, normalized.
    """

    center: float
    sigma: float
    chirp: float = 0.0
    delay: float = 0.0
    bin_spacing: float = 0.0
    coefficients: tuple[complex, ...] = (1.0 + 0j,)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if not self.center > 0:
            raise ValueError(f"center frequency must be positive, got {self.center!r}")
        object.__setattr__(self, "coefficients", _normalized_tuple(self.coefficients, "pulse"))

    @classmethod
    def from_wavelength(
        cls,
        center_wavelength: float,
        fwhm_wavelength: float,
        chirp: float = 0.0,
        *,
        delay: float = 0.0,
        bin_spacing: float = 0.0,
        coefficients: Sequence[complex] = (1.0,),
    ) -> "ChirpedPulseSpec":
        return cls(
            center=wavelength_to_angular(center_wavelength),
            sigma=fwhm_wavelength_to_sigma(center_wavelength, fwhm_wavelength),
            chirp=chirp,
            delay=delay,
            bin_spacing=bin_spacing,
            coefficients=tuple(coefficients),
        )

    @property
    def dimension(self) -> int:
        return len(self.coefficients)

    @property
    def center_wavelength(self) -> float:
        return angular_to_wavelength(self.center)

    def with_coefficients(self, coefficients: Sequence[complex]) -> "ChirpedPulseSpec":
        return replace(self, coefficients=tuple(coefficients))

    def max_phase_rate(self, n_sigma: float = COVERAGE_SIGMAS) -> float:
        """Upper bound on |d(phase)/dw| over the +-n_sigma window (s)."""
        quadratic = 2.0 * abs(self.chirp) * n_sigma * self.sigma
        linear = (self.dimension - 1) * abs(self.bin_spacing) + abs(self.delay)
        return quadratic + linear


@dataclass(frozen=True)
class QuditState:
    """Time-bin state sum_j c_j |t_j> with bins spaced by ``bin_spacing``."""

    coefficients: tuple[complex, ...]
    bin_spacing: float

    def __post_init__(self):
        coeffs = _normalized_tuple(self.coefficients, "state")
        if len(coeffs) < 2:
            raise ValueError("a time-bin state needs at least two bins")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def dimension(self) -> int:
        return len(self.coefficients)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=complex)


def qubit_coefficients(theta: float, phi: float) -> tuple[complex, complex]:
    return (complex(math.cos(theta)), complex(np.exp(1j * phi) * math.sin(theta)))


def qubit_spec(theta: float, phi: float, base: ChirpedPulseSpec) -> ChirpedPulseSpec:
    """Replace the bin amplitudes of a two-bin pulse with cos(theta), e^{i phi} sin(theta)."""
    if base.dimension != 2:
        raise ValueError(f"qubit_spec needs a two-bin base pulse, got {base.dimension} bins")
    return base.with_coefficients(qubit_coefficients(theta, phi))


def qubit_state(theta: float, phi: float, bin_spacing: float) -> QuditState:
    return QuditState(qubit_coefficients(theta, phi), bin_spacing)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform angular-frequency grid ``start + k * step`` for k < count."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"grid step must be positive, got {self.step!r}")
        if self.count < 2:
            raise ValueError(f"grid needs at least two points, got {self.count!r}")

    @classmethod
    def spanning(cls, low: float, high: float, step: float) -> "FrequencyGrid":
        """Smallest grid with the given step whose span contains [low, high]."""
        count = int(math.ceil((high - low) / step - 1e-9)) + 1
        return cls(low, step, max(count, 2))

    @classmethod
    def for_spec(cls, spec: ChirpedPulseSpec, step: float | None = None,
                 n_sigma: float = COVERAGE_SIGMAS) -> "FrequencyGrid":
        if step is None:
            step = default_step(spec)
        half = n_sigma * spec.sigma
        return cls.spanning(spec.center - half, spec.center + half, step)

    @property
    def stop(self) -> float:
        return self.start + (self.count - 1) * self.step

    @property
    def omega(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    def covers(self, low: float, high: float, rtol: float = 1e-12) -> bool:
        slack = rtol * max(abs(low), abs(high))
        return self.start <= low + slack and self.stop >= high - slack

    def refined(self, factor: int = 2) -> "FrequencyGrid":
        """Same span, ``factor`` times denser."""
        return FrequencyGrid(self.start, self.step / factor, (self.count - 1) * factor + 1)


def default_step(spec: ChirpedPulseSpec, max_phase_step: float = math.pi / 8) -> float:
    """Grid step keeping every phase term below ``max_phase_step`` per sample."""
    rate = spec.max_phase_rate()
    envelope_step = spec.sigma / 16.0
    if rate == 0:
        return envelope_step
    return min(envelope_step, max_phase_step / rate)


def trapezoid_weights(count: int, step: float) -> np.ndarray:
    w = np.full(count, step)
    w[0] = w[-1] = 0.5 * step
    return w


@dataclass(frozen=True)
class SpectralField:
    """Complex field amplitude sampled on a :class:`FrequencyGrid`."""

    grid: FrequencyGrid
    amplitude: np.ndarray = field(repr=False)

    def __post_init__(self):
        amp = np.array(self.amplitude, dtype=complex)
        if amp.shape != (self.grid.count,):
            raise ValueError(f"amplitude shape {amp.shape} does not match grid of {self.grid.count}")
        if not np.all(np.isfinite(amp)):
            raise ValueError("field amplitude contains non-finite entries")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitude", amp)

    @property
    def omega(self) -> np.ndarray:
        return self.grid.omega

    @property
    def intensity(self) -> np.ndarray:
        return np.abs(self.amplitude) ** 2

    def energy(self) -> float:
        """Trapezoid estimate of the integral of |E|^2 over the grid."""
        return float(np.trapezoid(self.intensity, dx=self.grid.step))

    def norm(self) -> float:
        return math.sqrt(self.energy())

    def normalized(self) -> "SpectralField":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize a zero field")
        return SpectralField(self.grid, self.amplitude / n)

    def moments(self) -> tuple[float, float]:
        """Intensity-weighted centroid and RMS width (rad/s)."""
        w = self.omega
        p = self.intensity
        total = np.trapezoid(p, dx=self.grid.step)
        if total == 0:
            raise ValueError("zero field has no centroid")
        mean = np.trapezoid(w * p, dx=self.grid.step) / total
        var = np.trapezoid((w - mean) ** 2 * p, dx=self.grid.step) / total
        return float(mean), float(math.sqrt(max(var, 0.0)))


def sample_field(spec: ChirpedPulseSpec, grid: FrequencyGrid, *, normalize: bool = True) -> SpectralField:
    """Evaluate ``spec`` on ``grid``; the grid must cover center +- 5 sigma."""
    half = COVERAGE_SIGMAS * spec.sigma
    low, high = spec.center - half, spec.center + half
    if not grid.covers(low, high):
        raise GridCoverageError(
            f"grid [{grid.start:.6e}, {grid.stop:.6e}] rad/s does not cover the required "
            f"span [{low:.6e}, {high:.6e}] rad/s (center +- {COVERAGE_SIGMAS:g} sigma)"
        )
    w = grid.omega
    dw = w - spec.center
    envelope = np.exp(-dw**2 / (4.0 * spec.sigma**2))
    phase = spec.chirp * dw**2 + w * spec.delay
    bins = np.zeros_like(w, dtype=complex)
    for j, cj in enumerate(spec.coefficients):
        if cj != 0:
            bins += cj * np.exp(1j * j * w * spec.bin_spacing)
    out = SpectralField(grid, envelope * np.exp(1j * phase) * bins)
    return out.normalized() if normalize else out
