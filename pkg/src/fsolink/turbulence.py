"""Optical turbulence: C_n^2 altitude profile, Fried parameter, path slicing,
and Von Karman phase screens."""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy import integrate, optimize, special

__all__ = [
    "HVProfile",
    "AtmosphereSlice",
    "AtmosphereSlicing",
    "PhaseScreen",
    "cn2_at_altitude",
    "integrated_cn2",
    "integrated_cn2_closed_form",
    "fried_parameter",
    "fried_from_integral",
    "slice_atmosphere",
    "von_karman_psd",
    "generate_phase_screen",
    "phase_structure_function",
    "von_karman_structure_function",
    "derive_seed",
]

# r0 = (0.423 k^2 sec(zeta) integral C_n^2 dh)^(-3/5)
_R0_COEFF = 0.423


@dataclass(frozen=True)
class HVProfile:
    """Hufnagel-Valley C_n^2(h) model.

    ``C_n^2(h) = 0.00594 (v/27)^2 (1e-5 h)^10 exp(-h/1000)
    + background exp(-h/1500) + A exp(-h/100)`` with ``h`` in meters.

    ``background_cn2`` is the fixed 2.7e-16 coefficient of the standard
    model; it is exposed so that a truly turbulence-free profile can be
    expressed as ``HVProfile(0, 0, 0)``.
    """

    ground_cn2: float = 1e-13
    wind_rms: float = 21.0
    background_cn2: float = 2.7e-16

    def __post_init__(self):
        for name in ("ground_cn2", "wind_rms", "background_cn2"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def is_null(self) -> bool:
        return self.ground_cn2 == 0 and self.wind_rms == 0 and self.background_cn2 == 0


def cn2_at_altitude(profile: HVProfile, h):
    """C_n^2 (m^-2/3) at altitude ``h`` (meters, scalar or array)."""
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise ValueError("altitude must be non-negative")
    wind = 0.00594 * (profile.wind_rms / 27.0) ** 2 * (1e-5 * h) ** 10 * np.exp(-h / 1000.0)
    out = (
        wind
        + profile.background_cn2 * np.exp(-h / 1500.0)
        + profile.ground_cn2 * np.exp(-h / 100.0)
    )
    return out if out.ndim else float(out)


def integrated_cn2_closed_form(profile: HVProfile, h0: float, h1: float) -> float:
    """Term-by-term analytic integral of C_n^2 over altitude [h0, h1]."""

    def cumulative(h):
        wind = (
            0.00594
            * (profile.wind_rms / 27.0) ** 2
            * 1e-50
            * 1000.0**11
            * special.gamma(11)
            * special.gammainc(11, h / 1000.0)
        )
        return (
            wind
            + profile.background_cn2 * 1500.0 * -math.expm1(-h / 1500.0)
            + profile.ground_cn2 * 100.0 * -math.expm1(-h / 100.0)
        )

    return float(cumulative(h1) - cumulative(h0))


def integrated_cn2(profile: HVProfile, h0: float, h1: float, rtol: float = 1e-10) -> float:
    """Adaptive quadrature of C_n^2 over altitude [h0, h1] (m^1/3)."""
    if h1 < h0:
        raise ValueError("h1 must not be below h0")
    if h1 == h0:
        return 0.0
    # break at the scale heights so each panel sees a smooth integrand
    marks = [m for m in (100.0, 500.0, 1500.0, 5000.0, 10000.0, 20000.0) if h0 < m < h1]
    edges = [h0, *marks, h1]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(
            lambda h: cn2_at_altitude(profile, h), a, b, epsabs=0.0, epsrel=rtol, limit=200
        )
        total += val
    return total


def fried_from_integral(path_integral: float, wavelength: float) -> float:
    """Plane-wave Fried parameter for a path-integrated C_n^2 (m^1/3).

    A zero integral returns ``math.inf``, the no-turbulence sentinel.
    """
    if path_integral < 0:
        raise ValueError("integrated C_n^2 must be non-negative")
    if path_integral == 0:
        return math.inf
    k = 2.0 * math.pi / wavelength
    return (_R0_COEFF * k**2 * path_integral) ** (-3.0 / 5.0)


def _secant(elevation: float) -> float:
    if not 0 < elevation <= 90:
        raise ValueError(f"elevation must be in (0, 90] degrees, got {elevation}")
    return 1.0 / math.sin(math.radians(elevation))


def fried_parameter(
    profile: HVProfile,
    wavelength: float,
    elevation: float = 90.0,
    atmosphere_top: float = 30e3,
) -> float:
    """Fried parameter r0 (meters) looking up through the whole atmosphere.

    Returns ``math.inf`` when the profile carries no turbulence.
    """
    integral = integrated_cn2(profile, 0.0, atmosphere_top) * _secant(elevation)
    return fried_from_integral(integral, wavelength)


@dataclass(frozen=True)
class AtmosphereSlice:
    altitude_bottom: float
    altitude_top: float
    path_thickness: float
    cn2_integral: float
    r0: float

    @property
    def mid_altitude(self) -> float:
        return 0.5 * (self.altitude_bottom + self.altitude_top)


@dataclass(frozen=True)
class AtmosphereSlicing:
    slices: tuple[AtmosphereSlice, ...]
    elevation: float
    atmosphere_top: float
    wavelength: float
    mode: str = "equal_strength"

    @property
    def total_cn2_integral(self) -> float:
        return math.fsum(s.cn2_integral for s in self.slices)

    @property
    def r0(self) -> float:
        return fried_from_integral(self.total_cn2_integral, self.wavelength)

    def screen_distances(self) -> list[float]:
        """Path distance from the ground to each slice's screen (its midpoint)."""
        sec = _secant(self.elevation)
        return [s.mid_altitude * sec for s in self.slices]


def slice_atmosphere(
    profile: HVProfile,
    n_slices: int = 14,
    elevation: float = 90.0,
    atmosphere_top: float = 30e3,
    wavelength: float = 1550e-9,
    mode: str = "equal_strength",
) -> AtmosphereSlicing:
    """Cut the path into ``n_slices`` layers, ground first.

    ``mode="equal_strength"`` places boundaries so every slice carries the
    same integrated C_n^2 (hence the same r0); ``"equal_thickness"`` uses
    uniform altitude steps.  A turbulence-free profile always slices by
    thickness and yields infinite r0 everywhere.
    """
    if n_slices < 1:
        raise ValueError("n_slices must be at least 1")
    if mode not in ("equal_strength", "equal_thickness"):
        raise ValueError(f"unknown slicing mode {mode!r}")
    sec = _secant(elevation)
    total = integrated_cn2_closed_form(profile, 0.0, atmosphere_top)

    if mode == "equal_thickness" or total == 0:
        bounds = list(np.linspace(0.0, atmosphere_top, n_slices + 1))
    else:
        bounds = [0.0]
        for i in range(1, n_slices):
            target = total * i / n_slices
            h = optimize.brentq(
                lambda x: integrated_cn2_closed_form(profile, 0.0, x) - target,
                bounds[-1],
                atmosphere_top,
                xtol=1e-9,
                rtol=1e-14,
            )
            bounds.append(h)
        bounds.append(atmosphere_top)

    slices = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        integral = integrated_cn2(profile, lo, hi) * sec
        slices.append(
            AtmosphereSlice(
                altitude_bottom=float(lo),
                altitude_top=float(hi),
                path_thickness=float((hi - lo) * sec),
                cn2_integral=integral,
                r0=fried_from_integral(integral, wavelength),
            )
        )
    return AtmosphereSlicing(tuple(slices), float(elevation), float(atmosphere_top), wavelength, mode)


def derive_seed(master_seed: int, *path: int) -> int:
    """Stable 64-bit seed for a (master, trial, slice, ...) coordinate."""
    ss = np.random.SeedSequence([int(master_seed), *(int(p) for p in path)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def von_karman_psd(f2, r0: float, outer_scale: float, inner_scale: float):
    """Phase PSD (rad^2 m^2) at squared spatial frequency ``f2`` (cycles/m)^2.

    ``0.023 r0^-5/3 exp(-(f/fm)^2) / (f^2 + f0^2)^(11/6)`` with
    ``fm = 5.92 / (2 pi l0)`` and ``f0 = 1 / L0``; this is the angular
    wavenumber form ``0.49 r0^-5/3 (k^2 + k0^2)^(-11/6) exp(-k^2/km^2)``
    rewritten per cycle.
    """
    f2 = np.asarray(f2, dtype=float)
    f0 = 1.0 / outer_scale if math.isfinite(outer_scale) else 0.0
    out = 0.023 * r0 ** (-5.0 / 3.0) * (f2 + f0**2) ** (-11.0 / 6.0)
    if inner_scale > 0:
        fm = 5.92 / (2.0 * math.pi * inner_scale)
        out = out * np.exp(-f2 / fm**2)
    return out


@functools.lru_cache(maxsize=16)
def _unit_amplitude(m: int, dx: float, outer_scale: float, inner_scale: float) -> np.ndarray:
    # sqrt(PSD) * df for r0 = 1; scaled by r0^(-5/6) per screen
    df = 1.0 / (m * dx)
    f = scipy.fft.fftfreq(m, dx)
    amp = np.sqrt(von_karman_psd(f[None, :] ** 2 + f[:, None] ** 2, 1.0, outer_scale, inner_scale)) * df
    amp[0, 0] = 0.0
    amp.setflags(write=False)
    return amp


@dataclass(frozen=True, eq=False)
class PhaseScreen:
    phase: np.ndarray
    dx: float
    r0: float
    outer_scale: float
    inner_scale: float
    seed: int

    @property
    def n(self) -> int:
        return self.phase.shape[0]


def generate_phase_screen(
    r0: float,
    outer_scale: float = 25.0,
    inner_scale: float = 0.01,
    n: int = 256,
    dx: float = 0.01,
    seed: int = 0,
    *,
    subharmonics: int = 3,
    oversample: int = 2,
    check_window: bool = True,
) -> PhaseScreen:
    """Draw one Von Karman phase screen.

    Complex white noise is filtered by the square root of the phase PSD on
    a periodic grid ``oversample`` times wider than the output, and the
    real part of the inverse FFT is cropped to ``n x n``.  Three levels of
    3x3 subharmonics (Lane et al.) then restore the tilt-scale power missing
    from the central frequency cell.  The mean is removed.

    ``r0 = inf`` returns an all-zero screen.  The same arguments always
    produce the same array.
    """
    if not r0 > 0:
        raise ValueError(f"r0 must be positive or inf, got {r0}")
    if not outer_scale > inner_scale >= 0:
        raise ValueError("need outer_scale > inner_scale >= 0")
    if n < 2 or not dx > 0:
        raise ValueError("need n >= 2 and dx > 0")
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    seed = int(seed)
    if math.isinf(r0):
        phase = np.zeros((n, n))
        phase.setflags(write=False)
        return PhaseScreen(phase, dx, r0, outer_scale, inner_scale, seed)
    if check_window and n * dx < 5 * r0:
        warnings.warn(
            f"screen window {n * dx:.3g} m spans fewer than 5 r0 ({r0:.3g} m); "
            "low-order statistics will be poorly sampled",
            RuntimeWarning,
            stacklevel=2,
        )

    rng = np.random.default_rng(seed)
    m = n * oversample
    amp = _unit_amplitude(m, float(dx), float(outer_scale), float(inner_scale)) * r0 ** (-5.0 / 6.0)
    noise = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    full = scipy.fft.ifft2(noise * amp) * (m * m)
    phase = full.real[:n, :n].copy()

    if subharmonics:
        x = (np.arange(n) - n // 2) * dx
        width = m * dx
        low = np.zeros((n, n), dtype=np.complex128)
        for level in range(1, subharmonics + 1):
            dfp = 1.0 / (3**level * width)
            fx = np.array([-1.0, 0.0, 1.0]) * dfp
            psd = von_karman_psd(fx[None, :] ** 2 + fx[:, None] ** 2, r0, outer_scale, inner_scale)
            psd[1, 1] = 0.0
            coeff = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))) * np.sqrt(psd) * dfp
            basis = np.exp(2j * np.pi * np.outer(fx, x))
            low += basis.T @ coeff @ basis
        phase += low.real

    phase -= phase.mean()
    phase.setflags(write=False)
    return PhaseScreen(phase, float(dx), float(r0), float(outer_scale), float(inner_scale), seed)


def phase_structure_function(screens, separations, axis: str = "both") -> np.ndarray:
    """Ensemble-averaged phase structure function at grid-aligned separations.

    Differences are taken along rows (``"x"``), columns (``"y"``) or both,
    using only sample pairs that lie inside the screen (no wrap-around).
    """
    screens = list(screens)
    if len(screens) < 2:
        raise ValueError("need at least two screens")
    dx = screens[0].dx
    n = screens[0].n
    if any(s.dx != dx or s.n != n for s in screens):
        raise ValueError("screens must share grid size and pitch")
    if axis not in ("x", "y", "both"):
        raise ValueError(f"axis must be 'x', 'y' or 'both', got {axis!r}")

    shifts = []
    for r in separations:
        s = r / dx
        k = int(round(s))
        if abs(s - k) > 1e-6 * max(1.0, s):
            raise ValueError(f"separation {r} m is not a multiple of the pitch {dx} m")
        if not 0 <= k < n:
            raise ValueError(f"separation {r} m does not fit in a {n * dx} m screen")
        shifts.append(k)

    out = np.zeros(len(shifts))
    for i, k in enumerate(shifts):
        if k == 0:
            continue
        acc = []
        for scr in screens:
            p = scr.phase
            if axis in ("x", "both"):
                acc.append(np.mean((p[:, k:] - p[:, :-k]) ** 2))
            if axis in ("y", "both"):
                acc.append(np.mean((p[k:, :] - p[:-k, :]) ** 2))
        out[i] = math.fsum(acc) / len(acc)
    return out


def _one_minus_j0(x: float) -> float:
    if x < 0.1:
        x2 = x * x
        return x2 / 4.0 - x2 * x2 / 64.0 + x2 * x2 * x2 / 2304.0
    return 1.0 - special.j0(x)


def von_karman_structure_function(r, r0: float, outer_scale: float, inner_scale: float) -> np.ndarray:
    """Theoretical phase structure function from the Von Karman spectrum.

    Evaluates ``4 pi int_0^inf k Phi(k) [1 - J0(k r)] dk``.  Up to
    ``k r = 200`` the integrand is integrated directly over log-spaced
    panels; beyond that the smooth ``k Phi`` part and the large-argument
    form of ``J0`` are integrated separately, the latter with a Fourier
    weight.
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    k0 = 2.0 * math.pi / outer_scale  # 0 for the Kolmogorov limit L0 = inf
    km = 5.92 / inner_scale if inner_scale > 0 else math.inf
    c = 0.49 * r0 ** (-5.0 / 3.0)

    def k_phi(k):
        val = k * c * (k * k + k0 * k0) ** (-11.0 / 6.0)
        if math.isfinite(km):
            val *= math.exp(-k * k / (km * km))
        return val

    def near(k, rr):
        return k_phi(k) * _one_minus_j0(k * rr)

    def far_amp(k, rr):
        return k_phi(k) * math.sqrt(2.0 / (math.pi * k * rr))

    out = np.empty_like(r_arr)
    for i, rr in enumerate(r_arr):
        if rr == 0:
            out[i] = 0.0
            continue
        split = 200.0 / rr
        lo = 1e-4 * min(k0, 1.0 / rr) if k0 > 0 else 1e-4 / rr
        # absolute tolerance from the Kolmogorov size of the answer
        tol = 1e-12 * 6.88 * (rr / r0) ** (5.0 / 3.0) / (4.0 * math.pi)
        edges = np.concatenate([[0.0], np.geomspace(lo, split, 160)])
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            total += integrate.quad(near, a, b, args=(rr,), limit=200, epsabs=tol, epsrel=1e-10)[0]
        total += integrate.quad(k_phi, split, math.inf, limit=200)[0]
        # J0(x) ~ sqrt(2/(pi x)) cos(x - pi/4) = sqrt(1/(pi x)) (cos x + sin x)
        for weight in ("cos", "sin"):
            part = integrate.quad(far_amp, split, math.inf, args=(rr,), weight=weight, wvar=rr)[0]
            total -= part * math.sqrt(0.5)
        out[i] = 4.0 * math.pi * total
    return out if np.ndim(r) else float(out[0])
