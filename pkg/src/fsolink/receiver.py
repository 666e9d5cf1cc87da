"""Receiver telescope: focal-plane field and coupling into fiber or detector."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
import scipy.fft

from .errors import SamplingError
from .optics import ComplexField, apply_circular_aperture, total_power

__all__ = [
    "ReceiverSpec",
    "SingleModeFiber",
    "CircularDetector",
    "SquareDetector",
    "CouplingTarget",
    "focal_field",
    "fiber_coupling_efficiency",
    "detector_capture_fraction",
    "coupling_efficiency",
    "field_of_view",
]


@dataclass(frozen=True)
class ReceiverSpec:
    aperture_diameter: float = 0.355
    focal_length: float = 1.6

    def __post_init__(self):
        if not self.aperture_diameter > 0:
            raise ValueError("aperture_diameter must be positive")
        if not self.focal_length > 0:
            raise ValueError("focal_length must be positive")


@dataclass(frozen=True)
class SingleModeFiber:
    """Gaussian fiber mode; ``mode_field_diameter`` is the 1/e^2 field diameter."""

    mode_field_diameter: float = 10e-6

    def __post_init__(self):
        if not self.mode_field_diameter > 0:
            raise ValueError("mode_field_diameter must be positive")

    @property
    def label(self) -> str:
        return f"fiber_{self.mode_field_diameter * 1e6:g}um"


@dataclass(frozen=True)
class CircularDetector:
    diameter: float = 1e-3

    def __post_init__(self):
        if not self.diameter > 0:
            raise ValueError("diameter must be positive")

    @property
    def label(self) -> str:
        return f"circular_{self.diameter * 1e3:g}mm"

    @property
    def area(self) -> float:
        return math.pi * self.diameter**2 / 4.0

    def mask(self, x):
        return x[None, :] ** 2 + x[:, None] ** 2 <= (self.diameter / 2.0) ** 2


@dataclass(frozen=True)
class SquareDetector:
    side: float = 1e-3

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError("side must be positive")

    @property
    def label(self) -> str:
        return f"square_{self.side * 1e3:g}mm"

    @property
    def area(self) -> float:
        return self.side**2

    def mask(self, x):
        inside = np.abs(x) <= self.side / 2.0
        return inside[None, :] & inside[:, None]


CouplingTarget = Union[SingleModeFiber, CircularDetector, SquareDetector]


def focal_field(field: ComplexField, rx: ReceiverSpec, r0: float | None = None) -> ComplexField:
    """Field in the back focal plane of the receiver.

    The receiver aperture is applied first, then a single optical Fourier
    transform maps the pupil onto a focal grid of pitch
    ``lambda f / (n dx)``.  The transform is unitary, so focal power equals
    the power through the aperture.

    When ``r0`` is given the focal window must span at least three
    turbulent spot scales ``lambda f / r0``.
    """
    lam, f = field.wavelength, rx.focal_length
    dxf = lam * f / (field.n * field.dx)
    window = field.n * dxf
    if r0 is not None and math.isfinite(r0):
        spot = lam * f / r0
        if window < 3.0 * spot:
            raise SamplingError(
                f"focal window {window * 1e6:.1f} um is smaller than 3 turbulent spot "
                f"scales ({3 * spot * 1e6:.1f} um); reduce the pupil pitch dx to at most "
                f"{r0 / 3.0:.4g} m"
            )
    pupil = apply_circular_aperture(field, rx.aperture_diameter).samples
    spec = scipy.fft.fftshift(scipy.fft.fft2(scipy.fft.ifftshift(pupil)))
    spec *= field.dx**2 / (1j * lam * f)
    return ComplexField(spec, dxf, lam)


def _fiber_mode(n: int, dx: float, mfd: float) -> np.ndarray:
    x = (np.arange(n) - n // 2) * dx
    g = np.exp(-(x**2) / (mfd / 2.0) ** 2)
    return np.outer(g, g)


def fiber_coupling_efficiency(focal: ComplexField, mfd: float) -> float:
    """Overlap of the focal field with a centered Gaussian fiber mode.

    ``|<E, M>|^2 / (<E, E> <M, M>)``; needs at least 4 focal pixels across
    the mode-field diameter.
    """
    if not mfd > 0:
        raise ValueError("mode-field diameter must be positive")
    if mfd / focal.dx < 4:
        raise SamplingError(
            f"fiber mode ({mfd * 1e6:.2f} um) spans only {mfd / focal.dx:.2f} focal "
            "pixels; at least 4 are needed"
        )
    e = focal.samples
    denom = np.vdot(e, e).real
    if denom == 0:
        return 0.0
    mode = _fiber_mode(focal.n, focal.dx, mfd)
    overlap = np.vdot(mode, e)
    eta = abs(overlap) ** 2 / (denom * np.sum(mode**2))
    return float(min(eta, 1.0))


def detector_capture_fraction(
    focal: ComplexField,
    target: CircularDetector | SquareDetector,
    reference_power: float | None = None,
) -> float:
    """Share of focal power falling on a detector centered on the axis.

    Only the part of the detector inside the focal window is seen.  That is
    safe while the window holds essentially all of the light, which is
    checked against ``reference_power`` (the power entering the focusing
    optics) when given: the window must contain at least 99.9% of it.
    """
    window_power = total_power(focal)
    if reference_power is not None and reference_power > 0:
        contained = window_power / reference_power
        if contained < 0.999:
            raise SamplingError(
                f"focal window holds only {contained:.4%} of the received power; "
                "enlarge the focal window by refining the pupil pitch"
            )
    if window_power == 0:
        return 0.0
    mask = target.mask(focal.coordinates())
    captured = float(np.sum(focal.intensity[mask]) * focal.dx**2)
    return min(captured / window_power, 1.0)


def coupling_efficiency(focal: ComplexField, target: CouplingTarget, reference_power=None) -> float:
    if isinstance(target, SingleModeFiber):
        return fiber_coupling_efficiency(focal, target.mode_field_diameter)
    return detector_capture_fraction(focal, target, reference_power)


def field_of_view(detector_area: float, focal_length: float) -> float:
    """Full-angle field of view ``2 atan(sqrt(A / pi) / f)`` in radians."""
    if not detector_area > 0 or not focal_length > 0:
        raise ValueError("detector area and focal length must be positive")
    return 2.0 * math.atan(math.sqrt(detector_area / math.pi) / focal_length)
