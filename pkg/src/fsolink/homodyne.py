"""Monte Carlo model of a balanced homodyne detector and its shot-noise
calibration.

Units: the vacuum quadrature has variance 1 (one shot-noise unit, SNU).
A single output sample is ``2 sqrt(N_lo) (x_s + x_0) + x_e`` where
``N_lo`` is the LO photon number per pulse, so the shot-noise part of the
raw variance is ``4 N_lo``.  Electronic noise has a fixed raw variance
``sigma_e^2``; quoted in SNU it is ``sigma_e^2 / (4 N_lo)`` and therefore
falls as ``1 / N_lo``, like ``NEP^2 B tau / (h nu I_lo)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants as _sc

from .turbulence import derive_seed

__all__ = [
    "HomodyneConfig",
    "HomodyneStats",
    "ShotNoisePoint",
    "ShotNoiseCurve",
    "lo_photons_from_power",
    "simulate_homodyne_batch",
    "shot_noise_calibration_curve",
]


def lo_photons_from_power(power: float, pulse_width: float, wavelength: float) -> float:
    """Photons in an LO pulse of peak ``power`` (W) lasting ``pulse_width`` (s)."""
    return power * pulse_width * wavelength / (_sc.h * _sc.c)


@dataclass(frozen=True)
class HomodyneConfig:
    """One homodyne acquisition.

    ``electronic_variance`` is in SNU at ``reference_lo_photons`` (which
    defaults to ``lo_photons``); the raw electronic variance it implies,
    ``4 * reference_lo_photons * electronic_variance``, stays fixed when
    the LO level changes.
    """

    lo_photons: float = 5e8
    pulse_width: float = 30e-9
    wavelength: float = 1550e-9
    signal_variance: float = 0.0
    electronic_variance: float = 1e-4
    samples: int = 1_000_000
    seed: int = 0
    reference_lo_photons: float | None = None

    def __post_init__(self):
        if not self.lo_photons >= 0:
            raise ValueError("lo_photons must be non-negative")
        if not self.signal_variance >= 0 or not self.electronic_variance >= 0:
            raise ValueError("variances must be non-negative")
        if self.samples < 2:
            raise ValueError("need at least 2 samples")
        if not self.pulse_width > 0 or not self.wavelength > 0:
            raise ValueError("pulse_width and wavelength must be positive")
        ref = self.reference_lo_photons
        if ref is not None and not ref > 0:
            raise ValueError("reference_lo_photons must be positive")
        if ref is None and self.lo_photons == 0 and self.electronic_variance > 0:
            raise ValueError("with the LO off, set reference_lo_photons to anchor the electronic variance")

    @property
    def raw_electronic_variance(self) -> float:
        ref = self.reference_lo_photons if self.reference_lo_photons is not None else self.lo_photons
        return 4.0 * ref * self.electronic_variance

    @property
    def lo_power(self) -> float:
        """Peak LO power (W) during the pulse."""
        return self.lo_photons * _sc.h * _sc.c / (self.wavelength * self.pulse_width)


@dataclass(frozen=True)
class HomodyneStats:
    lo_photons: float
    samples: int
    mean: float
    variance: float
    variance_stderr: float

    @property
    def normalized_variance(self) -> float:
        """Variance in SNU, ``Var / (4 N_lo)``; undefined with the LO off."""
        if self.lo_photons == 0:
            return math.nan
        return self.variance / (4.0 * self.lo_photons)


def simulate_homodyne_batch(cfg: HomodyneConfig) -> HomodyneStats:
    rng = np.random.default_rng(int(cfg.seed))
    m = int(cfg.samples)
    x0 = rng.standard_normal(m)
    xs = rng.standard_normal(m) * math.sqrt(cfg.signal_variance)
    xe = rng.standard_normal(m) * math.sqrt(cfg.raw_electronic_variance)
    out = 2.0 * math.sqrt(cfg.lo_photons) * (xs + x0) + xe
    var = float(np.var(out, ddof=1))
    return HomodyneStats(
        lo_photons=float(cfg.lo_photons),
        samples=m,
        mean=float(np.mean(out)),
        variance=var,
        variance_stderr=var * math.sqrt(2.0 / (m - 1)),
    )


@dataclass(frozen=True)
class ShotNoisePoint:
    lo_photons: float
    raw_variance: float
    raw_variance_stderr: float
    normalized_variance: float
    ele_ratio: float


@dataclass(frozen=True)
class ShotNoiseCurve:
    points: tuple[ShotNoisePoint, ...]
    electronic_variance: float
    electronic_variance_stderr: float
    slope: float
    slope_stderr: float
    intercept: float
    intercept_stderr: float
    r_squared: float


def shot_noise_calibration_curve(cfg_base: HomodyneConfig, lo_levels) -> ShotNoiseCurve:
    """Sweep the LO level without signal and fit ``Var = slope N_lo + intercept``.

    Each level is a separate batch seeded from ``(cfg_base.seed, index)``.
    An extra LO-off batch measures the electronic floor directly; the
    ``ele_ratio`` column is that floor over the shot noise ``4 N_lo`` at
    each level.  The line is fitted by weighted least squares with the
    known sampling error of each variance, so the reported standard errors
    are meaningful even for a handful of levels.  The intercept is a
    variance and is constrained to be non-negative; its standard error is
    that of the unconstrained fit.
    """
    levels = [float(v) for v in lo_levels]
    if len(levels) < 3:
        raise ValueError("need at least three LO levels")
    if len(set(levels)) < 2:
        raise ValueError("LO levels are all equal; the slope is undetermined")
    if any(v <= 0 for v in levels):
        raise ValueError("LO levels must be positive")

    # anchor the electronic floor at one LO level so its raw variance is fixed
    anchor = max(levels)
    base = replace(
        cfg_base,
        signal_variance=0.0,
        electronic_variance=cfg_base.raw_electronic_variance / (4.0 * anchor),
        reference_lo_photons=anchor,
    )

    def batch(lo, index):
        cfg = replace(base, lo_photons=lo, seed=derive_seed(cfg_base.seed, index))
        return simulate_homodyne_batch(cfg)

    dark = batch(0.0, len(levels))
    stats = [batch(lo, i) for i, lo in enumerate(levels)]

    x = np.array(levels)
    y = np.array([s.variance for s in stats])
    sig = np.array([s.variance_stderr for s in stats])
    w = 1.0 / sig**2
    design = np.column_stack([x, np.ones_like(x)])
    normal = design.T @ (design * w[:, None])
    cov = np.linalg.inv(normal)
    slope, intercept = cov @ (design.T @ (w * y))
    if intercept < 0:
        # constrained optimum sits on the boundary: refit through the origin
        intercept = 0.0
        slope = float(np.sum(w * x * y) / np.sum(w * x * x))
    fit = design @ np.array([slope, intercept])
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    points = tuple(
        ShotNoisePoint(
            lo_photons=s.lo_photons,
            raw_variance=s.variance,
            raw_variance_stderr=s.variance_stderr,
            normalized_variance=s.normalized_variance,
            ele_ratio=dark.variance / (4.0 * s.lo_photons),
        )
        for s in stats
    )
    return ShotNoiseCurve(
        points=points,
        electronic_variance=dark.variance,
        electronic_variance_stderr=dark.variance_stderr,
        slope=float(slope),
        slope_stderr=float(math.sqrt(cov[0, 0])),
        intercept=float(intercept),
        intercept_stderr=float(math.sqrt(cov[1, 1])),
        r_squared=r2,
    )
