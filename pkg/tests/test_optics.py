import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fsolink.errors import SamplingError
from fsolink.optics import (
    ComplexField,
    GaussianBeamSpec,
    apply_circular_aperture,
    beam_radius,
    divergence_full_angle,
    gaussian_aperture_transmission,
    make_gaussian_beam,
    max_angular_spectrum_distance,
    propagate_vacuum,
    total_power,
)

LAM = 1550e-9
W0 = 0.0355


def w_of_z(w0, lam, z):
    # independent Gaussian-beam oracle
    zr = math.pi * w0**2 / lam
    return w0 * math.sqrt(1 + (z / zr) ** 2)


def test_complex_field_validation():
    with pytest.raises(ValueError):
        ComplexField(np.zeros((4, 5)), 0.1, LAM)
    with pytest.raises(ValueError):
        ComplexField(np.zeros((1, 1)), 0.1, LAM)
    with pytest.raises(ValueError):
        ComplexField(np.zeros((4, 4)), -0.1, LAM)
    with pytest.raises(ValueError):
        ComplexField(np.full((4, 4), np.nan), 0.1, LAM)
    f = ComplexField(np.ones((4, 4)), 0.1, LAM)
    assert not f.samples.flags.writeable


def test_gaussian_launch_power_and_edge_intensity():
    spec = GaussianBeamSpec(W0, 1.0, LAM)
    n, dx = 256, W0 / 16
    u = make_gaussian_beam(spec, n, dx)
    assert total_power(u) == pytest.approx(1.0, rel=1e-6)
    c = n // 2
    ratio = u.intensity[c, c + 16] / u.intensity[c, c]
    assert ratio == pytest.approx(math.exp(-2), rel=1e-12)


def test_zero_power_beam_is_zero():
    u = make_gaussian_beam(GaussianBeamSpec(W0, 0.0, LAM), 64, W0 / 8)
    assert not np.any(u.samples)
    assert total_power(u) == 0.0


def test_launch_grid_too_small():
    with pytest.raises(SamplingError):
        make_gaussian_beam(GaussianBeamSpec(W0, 1.0, LAM), 32, W0 / 8)


def test_launch_divergence_matches_quoted_value():
    spec = GaussianBeamSpec(W0, 1.0, LAM)
    assert spec.divergence_half_angle == pytest.approx(13.9e-6, abs=0.05e-6)


def test_zero_distance_is_identity():
    u = make_gaussian_beam(GaussianBeamSpec(W0, 1.0, LAM), 64, W0 / 8)
    v = propagate_vacuum(u, 0.0)
    assert np.array_equal(u.samples, v.samples)


def test_angular_spectrum_limit_is_reported():
    u = make_gaussian_beam(GaussianBeamSpec(0.01, 1.0, LAM), 64, 0.001)
    zmax = max_angular_spectrum_distance(64, 0.001, LAM)
    with pytest.raises(SamplingError, match="limit"):
        propagate_vacuum(u, 1.01 * zmax)


def test_scaled_path_700km_radius():
    spec = GaussianBeamSpec(W0, 1.0, LAM)
    u = make_gaussian_beam(spec, 64, W0 / 8)
    far = propagate_vacuum(u, 700e3, dx_out=0.25, n_out=256)
    expected = w_of_z(W0, LAM, 700e3)
    assert expected == pytest.approx(9.7289, abs=1e-3)
    assert beam_radius(far) == pytest.approx(expected, rel=0.01)
    assert total_power(far) == pytest.approx(1.0, rel=1e-3)  # the 64 m window clips a sliver


@pytest.mark.parametrize("z", [0.05, 0.2, 0.4])
def test_angular_spectrum_radius_and_power(z):
    # Rayleigh range 0.127 m, so these span the near and far field
    w0, n, dx = 0.25e-3, 256, 50e-6
    u = make_gaussian_beam(GaussianBeamSpec(w0, 1.0, LAM), n, dx)
    assert z <= max_angular_spectrum_distance(n, dx, LAM)
    v = propagate_vacuum(u, z)
    assert beam_radius(v) == pytest.approx(w_of_z(w0, LAM, z), rel=0.01)
    assert total_power(v) == pytest.approx(total_power(u), rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    frac=st.floats(0.0, 1.0),
)
def test_propagation_conserves_power_for_any_input(seed, frac):
    rng = np.random.default_rng(seed)
    n, dx = 32, 1e-3
    samples = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    u = ComplexField(samples, dx, LAM)
    z = frac * max_angular_spectrum_distance(n, dx, LAM)
    assert total_power(propagate_vacuum(u, z)) == pytest.approx(total_power(u), rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.complex_numbers(min_magnitude=1e-3, max_magnitude=1e3))
def test_propagation_and_aperture_are_linear(seed, c):
    rng = np.random.default_rng(seed)
    samples = rng.standard_normal((16, 16)) + 1j * rng.standard_normal((16, 16))
    u = ComplexField(samples, 1e-3, LAM)
    cu = u.replace(c * u.samples)
    a = propagate_vacuum(cu, 0.5).samples
    b = c * propagate_vacuum(u, 0.5).samples
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12 * np.abs(b).max())
    ap = apply_circular_aperture(cu, 0.01).samples
    assert np.allclose(ap, c * apply_circular_aperture(u, 0.01).samples, rtol=1e-13, atol=0)


def test_large_aperture_keeps_power():
    u = make_gaussian_beam(GaussianBeamSpec(W0, 1.0, LAM), 64, W0 / 8)
    diag = math.sqrt(2) * u.width
    assert total_power(apply_circular_aperture(u, diag)) == total_power(u)


def test_aperture_sets_outside_to_zero_only():
    rng = np.random.default_rng(3)
    u = ComplexField(rng.standard_normal((32, 32)) + 0j, 0.01, LAM)
    out = apply_circular_aperture(u, 0.2)
    r2 = u.radius_squared()
    inside = r2 <= 0.1**2
    assert np.array_equal(out.samples[inside], u.samples[inside])
    assert not np.any(out.samples[~inside])


def test_aperture_equal_to_beam_radius():
    # 16 samples per w: the hard edge is resolved to better than 0.5%
    w = 0.16
    u = make_gaussian_beam(GaussianBeamSpec(w, 1.0, LAM), 256, w / 16)
    frac = total_power(apply_circular_aperture(u, 2 * w))
    assert gaussian_aperture_transmission(w, w) == pytest.approx(1 - math.exp(-2), rel=1e-12)
    assert frac == pytest.approx(0.8647, rel=0.005)


def test_diffraction_oracle_values():
    w = w_of_z(W0, LAM, 700e3)
    t = gaussian_aperture_transmission(w, 0.1775)
    assert t == pytest.approx(6.65e-4, rel=2e-3)
    assert -10 * math.log10(t) == pytest.approx(31.8, abs=0.05)
    assert gaussian_aperture_transmission(1.0, 100.0) == 1.0
    assert gaussian_aperture_transmission(1.0, 0.0) == 0.0


def test_divergence_full_angle():
    assert divergence_full_angle(LAM, 0.08) == pytest.approx(23.6e-6, abs=0.05e-6)
    assert divergence_full_angle(LAM, 0.08) * 10e3 == pytest.approx(0.236, abs=5e-4)
    assert divergence_full_angle(LAM, 0.16) == pytest.approx(divergence_full_angle(LAM, 0.08) / 2, rel=1e-15)
    assert divergence_full_angle(LAM, 0.355) == pytest.approx(5.33e-6, abs=0.005e-6)
    with pytest.raises(ValueError):
        divergence_full_angle(LAM, 0.0)
