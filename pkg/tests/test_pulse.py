import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from timebin_sfg.pulse import (
    ChirpedPulseSpec,
    FrequencyGrid,
    GridCoverageError,
    QuditState,
    angular_to_wavelength,
    default_step,
    fwhm_wavelength_to_sigma,
    normalize_coefficients,
    qubit_coefficients,
    qubit_spec,
    sample_field,
    sigma_to_fwhm_wavelength,
    trapezoid_weights,
    wavelength_to_angular,
)

C = 299792458.0


def test_wavelength_conversion_hand_value():
    # 2 pi c / 790.2 nm worked by hand
    assert wavelength_to_angular(790.2e-9) == pytest.approx(2.383765587583970e15, rel=1e-12)


def test_sigma_from_fwhm_frozen():
    assert fwhm_wavelength_to_sigma(810.4e-9, 4.53e-9) == pytest.approx(5.517498e12, rel=1e-6)
    assert fwhm_wavelength_to_sigma(785.7e-9, 11.9e-9) == pytest.approx(1.541971e13, rel=1e-6)


@given(st.floats(300e-9, 2000e-9), st.floats(0.01e-9, 50e-9))
def test_fwhm_sigma_round_trip(lam, fwhm):
    sigma = fwhm_wavelength_to_sigma(lam, fwhm)
    assert sigma_to_fwhm_wavelength(lam, sigma) == pytest.approx(fwhm, rel=1e-12)


@given(st.floats(100e-9, 5000e-9))
def test_wavelength_round_trip(lam):
    assert angular_to_wavelength(wavelength_to_angular(lam)) == pytest.approx(lam, rel=1e-14)


def test_angular_to_wavelength_elementwise():
    w = np.array([2e15, 3e15])
    np.testing.assert_allclose(angular_to_wavelength(w), 2 * math.pi * C / w)


@pytest.mark.parametrize("bad", [0.0, -1e12])
def test_spec_rejects_nonpositive_sigma(bad):
    with pytest.raises(ValueError):
        ChirpedPulseSpec(2.3e15, bad)


def test_spec_rejects_unnormalized_coefficients():
    with pytest.raises(ValueError):
        ChirpedPulseSpec(2.3e15, 5e12, coefficients=(1.0, 1.0))


@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=6).filter(lambda xs: sum(abs(x) ** 2 for x in xs) > 1e-6))
def test_normalize_coefficients(xs):
    out = normalize_coefficients(xs)
    assert sum(abs(x) ** 2 for x in out) == pytest.approx(1.0, abs=1e-12)


def test_normalize_rejects_zero():
    with pytest.raises(ValueError):
        normalize_coefficients([0.0, 0.0])


@given(st.floats(0, math.pi), st.floats(-math.pi, math.pi))
def test_qubit_coefficients_normalized(theta, phi):
    a, b = qubit_coefficients(theta, phi)
    assert abs(a) ** 2 + abs(b) ** 2 == pytest.approx(1.0)


def test_qubit_spec_needs_two_bins():
    base = ChirpedPulseSpec(2.3e15, 5e12, bin_spacing=2e-12, coefficients=(1, 0, 0))
    with pytest.raises(ValueError):
        qubit_spec(0.3, 0.2, base)


def test_qudit_state_needs_two_bins():
    with pytest.raises(ValueError):
        QuditState((1.0,), 1e-12)


def test_trapezoid_weights():
    np.testing.assert_allclose(trapezoid_weights(4, 2.0), [1.0, 2.0, 2.0, 1.0])


def test_grid_spanning_covers():
    g = FrequencyGrid.spanning(1.0, 2.05, 0.1)
    assert g.covers(1.0, 2.05)
    assert g.refined(2).covers(1.0, 2.05)
    assert g.refined(2).step == pytest.approx(0.05)


def test_grid_rejects_bad_step():
    with pytest.raises(ValueError):
        FrequencyGrid(0.0, 0.0, 10)


def test_sample_field_coverage_error_reports_span():
    spec = ChirpedPulseSpec(2.3e15, 5e12)
    grid = FrequencyGrid(2.3e15 - 1e13, 1e11, 201)
    with pytest.raises(GridCoverageError, match="required span"):
        sample_field(spec, grid)


def test_transform_limited_moments():
    # |E|^2 of a single-bin pulse is a Gaussian of RMS width sigma
    spec = ChirpedPulseSpec(2.3e15, 5e12, chirp=1e-25)
    f = sample_field(spec, FrequencyGrid.for_spec(spec, n_sigma=8))
    centre, rms = f.moments()
    assert centre == pytest.approx(2.3e15, rel=1e-12)
    assert rms == pytest.approx(5e12, rel=1e-6)
    assert f.energy() == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(theta=st.floats(0, math.pi), phi=st.floats(-math.pi, math.pi),
       chirp=st.floats(-1e-24, 1e-24), tau=st.floats(0.5e-12, 5e-12))
def test_sampled_field_is_normalized_and_chirp_keeps_intensity(theta, phi, chirp, tau):
    two = (1.0, 0.0)
    spec = qubit_spec(theta, phi, ChirpedPulseSpec(2.3e15, 5e12, chirp, bin_spacing=tau, coefficients=two))
    flat = qubit_spec(theta, phi, ChirpedPulseSpec(2.3e15, 5e12, 0.0, bin_spacing=tau, coefficients=two))
    grid = FrequencyGrid.for_spec(spec)
    f = sample_field(spec, grid)
    assert f.energy() == pytest.approx(1.0, rel=1e-9)
    # quadratic spectral phase never changes |E(w)|
    np.testing.assert_allclose(f.intensity, sample_field(flat, grid).intensity, atol=1e-12 * f.intensity.max())


def test_default_step_resolves_phase():
    spec = ChirpedPulseSpec(2.3e15, 5e12, chirp=6.7e-25, bin_spacing=2e-12, coefficients=(0.6, 0.8))
    h = default_step(spec)
    assert h <= spec.sigma / 16
    assert h * spec.max_phase_rate() <= math.pi / 8 * (1 + 1e-12)


def test_spectral_field_is_read_only():
    spec = ChirpedPulseSpec(2.3e15, 5e12)
    f = sample_field(spec, FrequencyGrid.for_spec(spec))
    with pytest.raises(ValueError):
        f.amplitude[0] = 1.0


def test_two_bin_spectral_fringe_period():
    # |1 + e^{i w tau}|^2 / 2 = 1 + cos(w tau): fringes of period 2 pi / tau on the envelope
    tau = 2.16e-12
    assert 2 * math.pi / tau == pytest.approx(2.909e12, rel=1e-3)
    s = 1 / math.sqrt(2)
    spec = ChirpedPulseSpec(2.3e15, 5e12, bin_spacing=tau, coefficients=(s, s))
    single = ChirpedPulseSpec(2.3e15, 5e12)
    grid = FrequencyGrid.for_spec(spec)
    two = sample_field(spec, grid, normalize=False).intensity
    one = sample_field(single, grid, normalize=False).intensity
    w = grid.omega
    np.testing.assert_allclose(two, one * (1 + np.cos(w * tau)), atol=1e-12)
