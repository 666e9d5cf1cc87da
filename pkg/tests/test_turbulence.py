import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from fsolink.turbulence import (
    HVProfile,
    cn2_at_altitude,
    derive_seed,
    fried_from_integral,
    fried_parameter,
    generate_phase_screen,
    integrated_cn2,
    integrated_cn2_closed_form,
    phase_structure_function,
    slice_atmosphere,
    von_karman_psd,
    von_karman_structure_function,
)

LAM = 1550e-9
DEFAULT = HVProfile()

# Frozen oracle: dense trapezoid (3e6 points) of the HV profile over 0-30 km.
HV_INTEGRAL_0_30KM = 1.0535392e-11


def r0_oracle(integral, lam):
    k = 2 * math.pi / lam
    return (0.423 * k**2 * integral) ** (-0.6)


def kolmogorov_vk_closed_form(r, r0, L0):
    # l0 = 0 Von Karman structure function in terms of K_5/6
    k0 = 2 * math.pi / L0
    return 6.16 * r0 ** (-5 / 3) * (
        0.6 * k0 ** (-5 / 3) - (r / k0) ** (5 / 6) / (special.gamma(11 / 6) * 2 ** (5 / 6)) * special.kv(5 / 6, k0 * r)
    )


def test_cn2_examples():
    assert cn2_at_altitude(DEFAULT, 0.0) == pytest.approx(1e-13 + 2.7e-16, rel=1e-12)
    assert cn2_at_altitude(DEFAULT, 10e3) == pytest.approx(1.7e-17, rel=0.03)
    h = np.linspace(0, 30e3, 7)
    bg = cn2_at_altitude(HVProfile(0.0, 0.0), h)
    assert np.allclose(bg, 2.7e-16 * np.exp(-h / 1500), rtol=1e-14, atol=0)


def test_profile_validation():
    with pytest.raises(ValueError):
        HVProfile(-1e-13, 21)
    with pytest.raises(ValueError):
        cn2_at_altitude(DEFAULT, -1.0)


@settings(max_examples=40, deadline=None)
@given(h1=st.floats(20e3, 40e3), dh=st.floats(1.0, 10e3))
def test_high_altitude_decay(h1, dh):
    assert cn2_at_altitude(DEFAULT, h1 + dh) < cn2_at_altitude(DEFAULT, h1)


def test_path_integral_matches_oracle():
    assert integrated_cn2(DEFAULT, 0, 30e3) == pytest.approx(HV_INTEGRAL_0_30KM, rel=1e-6)
    assert integrated_cn2_closed_form(DEFAULT, 0, 30e3) == pytest.approx(HV_INTEGRAL_0_30KM, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(0, 1e-12), v=st.floats(0, 60), h0=st.floats(0, 15e3), dh=st.floats(1.0, 15e3))
def test_quadrature_agrees_with_closed_form(a, v, h0, dh):
    p = HVProfile(a, v)
    q = integrated_cn2(p, h0, h0 + dh)
    c = integrated_cn2_closed_form(p, h0, h0 + dh)
    assert q == pytest.approx(c, rel=1e-8)


def test_fried_parameter_downlink_scenario():
    r0 = fried_parameter(DEFAULT, LAM, 90.0, 30e3)
    assert r0 == pytest.approx(r0_oracle(HV_INTEGRAL_0_30KM, LAM), rel=1e-6)
    assert r0 == pytest.approx(0.076, abs=0.001)


def test_fried_parameter_scaling():
    p1 = HVProfile(1e-14, 0.0, 0.0)
    p2 = HVProfile(2e-14, 0.0, 0.0)
    assert fried_parameter(p2, LAM) / fried_parameter(p1, LAM) == pytest.approx(2 ** -0.6, rel=1e-9)
    assert fried_parameter(DEFAULT, 2 * LAM) / fried_parameter(DEFAULT, LAM) == pytest.approx(2**1.2, rel=1e-12)


def test_zero_turbulence_sentinel():
    assert fried_parameter(HVProfile(0, 0, 0), LAM) == math.inf
    assert fried_from_integral(0.0, LAM) == math.inf


def test_elevation_bounds():
    with pytest.raises(ValueError):
        fried_parameter(DEFAULT, LAM, elevation=0.0)
    with pytest.raises(ValueError):
        fried_parameter(DEFAULT, LAM, elevation=91.0)


def test_fourteen_slices():
    s = slice_atmosphere(DEFAULT, 14)
    assert len(s.slices) == 14
    full = integrated_cn2(DEFAULT, 0, 30e3)
    assert s.total_cn2_integral == pytest.approx(full, rel=1e-6)
    r0 = fried_parameter(DEFAULT, LAM)
    for sl in s.slices:
        assert sl.r0 == pytest.approx(r0 * 14**0.6, rel=1e-6)
        assert sl.path_thickness == pytest.approx(sl.altitude_top - sl.altitude_bottom, rel=1e-12)
    # equal strength pushes the boundaries down toward the ground layer
    assert s.slices[0].altitude_top == pytest.approx(7.8, abs=0.1)


def test_single_slice_matches_fried_parameter():
    s = slice_atmosphere(DEFAULT, 1)
    assert s.slices[0].r0 == pytest.approx(fried_parameter(DEFAULT, LAM), rel=1e-6)


@settings(max_examples=15, deadline=None)
@given(
    n=st.integers(1, 20),
    elevation=st.floats(20.0, 90.0),
    mode=st.sampled_from(["equal_strength", "equal_thickness"]),
    a=st.floats(1e-15, 1e-12),
)
def test_slicing_invariants(n, elevation, mode, a):
    p = HVProfile(a, 21.0)
    s = slice_atmosphere(p, n, elevation, 30e3, LAM, mode)
    sec = 1 / math.sin(math.radians(elevation))
    assert len(s.slices) == n
    assert s.slices[0].altitude_bottom == 0.0
    assert s.slices[-1].altitude_top == 30e3
    for lo, hi in zip(s.slices[:-1], s.slices[1:]):
        assert lo.altitude_top == hi.altitude_bottom
    assert all(sl.path_thickness > 0 for sl in s.slices)
    full = integrated_cn2(p, 0, 30e3) * sec
    assert s.total_cn2_integral == pytest.approx(full, rel=1e-6)
    composed = math.fsum(sl.r0 ** (-5 / 3) for sl in s.slices) ** -0.6
    assert composed == pytest.approx(fried_parameter(p, LAM, elevation), rel=1e-6)
    if mode == "equal_strength":
        assert max(sl.r0 for sl in s.slices) == pytest.approx(min(sl.r0 for sl in s.slices), rel=1e-6)


def test_null_profile_slices_are_infinite():
    s = slice_atmosphere(HVProfile(0, 0, 0), 14)
    assert all(sl.r0 == math.inf for sl in s.slices)
    assert s.r0 == math.inf


def test_seed_derivation_is_stable_and_distinct():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    seeds = {derive_seed(7, t, k) for t in range(20) for k in range(14)}
    assert len(seeds) == 280
    assert all(0 <= s < 2**64 for s in seeds)


def test_zero_turbulence_screen_is_zero():
    s = generate_phase_screen(math.inf, n=64, dx=0.01, seed=3)
    assert s.phase.shape == (64, 64)
    assert not np.any(s.phase)


def test_screen_is_deterministic_and_piston_free():
    a = generate_phase_screen(0.1, 25.0, 0.01, 128, 0.01, seed=42)
    b = generate_phase_screen(0.1, 25.0, 0.01, 128, 0.01, seed=42)
    c = generate_phase_screen(0.1, 25.0, 0.01, 128, 0.01, seed=43)
    assert np.array_equal(a.phase, b.phase)
    assert not np.array_equal(a.phase, c.phase)
    assert abs(a.phase.mean()) < 1e-12
    assert np.all(np.isfinite(a.phase))
    assert not a.phase.flags.writeable


def test_screen_argument_checks():
    with pytest.raises(ValueError):
        generate_phase_screen(-0.1)
    with pytest.raises(ValueError):
        generate_phase_screen(0.1, outer_scale=0.01, inner_scale=0.02)
    with pytest.warns(RuntimeWarning):
        generate_phase_screen(1.0, n=32, dx=0.01)


def test_halving_r0_scales_structure_function():
    seeds = range(4)
    seps = [0.02, 0.05, 0.1]
    d1 = phase_structure_function([generate_phase_screen(0.2, n=128, seed=s) for s in seeds], seps)
    d2 = phase_structure_function([generate_phase_screen(0.1, n=128, seed=s) for s in seeds], seps)
    assert np.allclose(d2 / d1, 2 ** (5 / 3), rtol=1e-10)


def test_structure_function_basics():
    screens = [generate_phase_screen(0.1, n=64, seed=s) for s in range(3)]
    assert phase_structure_function(screens, [0.0])[0] == 0.0
    with pytest.raises(ValueError):
        phase_structure_function(screens, [0.64])
    with pytest.raises(ValueError):
        phase_structure_function(screens, [0.015])
    with pytest.raises(ValueError):
        phase_structure_function(screens[:1], [0.02])


def test_screen_isotropy_and_zero_mean():
    screens = [generate_phase_screen(0.1, 25.0, 0.01, 256, 0.01, seed=derive_seed(5, i)) for i in range(30)]
    seps = [0.04, 0.16, 0.64]
    dx = phase_structure_function(screens, seps, axis="x")
    dy = phase_structure_function(screens, seps, axis="y")
    # per-screen x/y differences give the ensemble standard error
    diffs = np.array(
        [phase_structure_function([s, s], seps, "x") - phase_structure_function([s, s], seps, "y") for s in screens]
    )
    se = diffs.std(axis=0, ddof=1) / math.sqrt(len(screens))
    assert np.all(np.abs(dx - dy) < 3 * se)
    centre = np.array([s.phase[128, 128] for s in screens])
    assert abs(centre.mean()) < 3 * centre.std(ddof=1) / math.sqrt(len(centre))


def test_psd_form():
    # per-cycle PSD equals the angular form rescaled by (2 pi)^2
    f2 = np.array([0.01, 1.0, 100.0])
    k = 2 * math.pi * np.sqrt(f2)
    k0, km = 2 * math.pi / 25.0, 5.92 / 0.01
    ang = 0.49 * 0.1 ** (-5 / 3) * (k**2 + k0**2) ** (-11 / 6) * np.exp(-(k**2) / km**2)
    per_cycle = von_karman_psd(f2, 0.1, 25.0, 0.01)
    assert np.allclose(per_cycle, ang * (2 * math.pi) ** 2, rtol=0.01)  # 0.023 vs 0.49/(2 pi)^(5/3)


def test_structure_function_oracle_agrees_with_closed_form():
    r = np.array([0.01, 0.1, 1.0, 5.0])
    numeric = von_karman_structure_function(r, 0.1, 25.0, 0.0)
    closed = kolmogorov_vk_closed_form(r, 0.1, 25.0)
    assert np.allclose(numeric, closed, rtol=2e-3)  # 6.16 is a rounded coefficient
    kolmo = von_karman_structure_function(r, 0.1, math.inf, 0.0)
    assert np.allclose(kolmo, 6.88 * (r / 0.1) ** (5 / 3), rtol=2e-3)
    assert von_karman_structure_function(0.0, 0.1, 25.0, 0.01) == 0.0
