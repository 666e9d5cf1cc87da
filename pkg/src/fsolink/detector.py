"""Photodiode equivalent-circuit noise model.

Everything here is SI.  Junction bandwidth comes from the RC corner of the
junction capacitance into the load; the diode NEP treats the dark current
as the noise source; the electronic noise variance in shot-noise units
follows ``V_ele = NEP^2 B tau / (h nu I_lo)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import constants as _sc

__all__ = [
    "PhysicalConstants",
    "CONSTANTS",
    "PhotodiodeSpec",
    "AmplifierSpec",
    "SweepRow",
    "depletion_width",
    "junction_capacitance",
    "junction_bandwidth",
    "saturation_current",
    "dark_current",
    "diode_nep",
    "electronic_noise_variance",
    "nep_for_electronic_variance",
    "sweep_detector_designs",
]


@dataclass(frozen=True)
class PhysicalConstants:
    h: float = _sc.h
    k: float = _sc.k
    q: float = _sc.e
    eps0: float = _sc.epsilon_0
    c: float = _sc.c


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class PhotodiodeSpec:
    """PIN photodiode parameters in SI units.

    Defaults are the InGaAs values used for the diameter sweeps, converted
    from cm-based units (mobility 1e4 cm^2/Vs, resistivity 0.142 ohm cm,
    n_i = 6.3e11 cm^-3, N_A = 1.2e31 cm^-3, mu_n = 250 cm^2/Vs, t = 55 cm,
    L_n = 14 nm).  Some of those values are physically odd (N_A, t, L_n)
    but are kept verbatim.

    ``exponent_voltage`` is the voltage in the dark-current exponential
    ``exp(q V / kT) - 1``; it defaults to the built-in potential.
    """

    diameter: float = 1e-3
    load_resistance: float = 50.0
    mobility: float = 1.0
    resistivity: float = 0.142e-2
    built_in_voltage: float = 0.77
    bias_voltage: float = 6.0
    dielectric_constant: float = 13.9
    intrinsic_density: float = 6.3e17
    acceptor_density: float = 1.2e37
    temperature: float = 300.0
    minority_mobility: float = 250e-4
    minority_lifetime: float = 270e-15
    base_thickness: float = 0.55
    diffusion_length: float = 14e-9
    quantum_efficiency: float = 0.95
    exponent_voltage: float = 0.77

    def __post_init__(self):
        for name in (
            "diameter",
            "load_resistance",
            "mobility",
            "resistivity",
            "dielectric_constant",
            "intrinsic_density",
            "acceptor_density",
            "temperature",
            "minority_mobility",
            "minority_lifetime",
            "base_thickness",
            "diffusion_length",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.built_in_voltage + self.bias_voltage <= 0:
            raise ValueError("built_in_voltage + bias_voltage must be positive")
        if self.exponent_voltage < 0:
            raise ValueError("exponent_voltage must be non-negative")
        if not 0 < self.quantum_efficiency <= 1:
            raise ValueError("quantum_efficiency must lie in (0, 1]")

    @property
    def area(self) -> float:
        return math.pi * (self.diameter / 2.0) ** 2

    def with_diameter(self, d: float) -> "PhotodiodeSpec":
        return replace(self, diameter=d)


@dataclass(frozen=True)
class AmplifierSpec:
    nep: float = 5e-12
    bandwidth: float = 10e6

    def __post_init__(self):
        if not self.nep > 0 or not self.bandwidth > 0:
            raise ValueError("amplifier NEP and bandwidth must be positive")


def depletion_width(pd: PhotodiodeSpec, const: PhysicalConstants = CONSTANTS) -> float:
    v = pd.built_in_voltage + pd.bias_voltage
    return math.sqrt(2.0 * pd.dielectric_constant * const.eps0 * pd.mobility * pd.resistivity * v)


def junction_capacitance(pd: PhotodiodeSpec, const: PhysicalConstants = CONSTANTS) -> float:
    return pd.dielectric_constant * const.eps0 * pd.area / depletion_width(pd, const)


def junction_bandwidth(pd: PhotodiodeSpec, const: PhysicalConstants = CONSTANTS) -> float:
    """RC-limited bandwidth in Hz, written in its expanded form.

    ``B = 1 / (pi R_L A) * sqrt(mu rho (V_A + V_bi) / (2 eps eps0))``, which
    equals ``1 / (2 pi R_L C_j)``.
    """
    v = pd.built_in_voltage + pd.bias_voltage
    root = math.sqrt(pd.mobility * pd.resistivity * v / (2.0 * pd.dielectric_constant * const.eps0))
    return root / (math.pi * pd.load_resistance * pd.area)


def saturation_current(pd: PhotodiodeSpec, const: PhysicalConstants = CONSTANTS) -> float:
    """Diffusion-limited saturation current I_0 in amperes."""
    thermal = const.k * pd.temperature * pd.minority_mobility / (const.q * pd.minority_lifetime)
    return (
        const.q
        * pd.area
        * pd.intrinsic_density**2
        / pd.acceptor_density
        * math.sqrt(thermal)
        * math.tanh(pd.base_thickness / pd.diffusion_length)
    )


def dark_current(pd: PhotodiodeSpec, const: PhysicalConstants = CONSTANTS) -> float:
    x = const.q * pd.exponent_voltage / (const.k * pd.temperature)
    return saturation_current(pd, const) * math.expm1(x)


def diode_nep(pd: PhotodiodeSpec, bandwidth: float, const: PhysicalConstants = CONSTANTS) -> float:
    """Dark-current NEP ``I_dark / (gamma sqrt(B))`` in W/sqrt(Hz)."""
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    return dark_current(pd, const) / (pd.quantum_efficiency * math.sqrt(bandwidth))


def electronic_noise_variance(
    nep_total: float,
    bandwidth: float,
    pulse_width: float,
    lo_power: float,
    wavelength: float,
    const: PhysicalConstants = CONSTANTS,
) -> float:
    """Electronic noise in shot-noise units, ``NEP^2 B tau / (h nu I_lo)``.

    ``nep_total`` is the diode NEP plus the amplifier NEP.
    """
    if not (nep_total > 0 and bandwidth > 0 and pulse_width > 0 and lo_power > 0 and wavelength > 0):
        raise ValueError("all arguments must be positive")
    photon_energy = const.h * const.c / wavelength
    return nep_total**2 * bandwidth * pulse_width / (photon_energy * lo_power)


def nep_for_electronic_variance(
    v_ele: float,
    bandwidth: float,
    pulse_width: float,
    lo_power: float,
    wavelength: float,
    const: PhysicalConstants = CONSTANTS,
) -> float:
    """Total NEP that yields a given electronic variance (inverse of the above)."""
    if not v_ele >= 0:
        raise ValueError("v_ele must be non-negative")
    photon_energy = const.h * const.c / wavelength
    return math.sqrt(v_ele * photon_energy * lo_power / (bandwidth * pulse_width))


@dataclass(frozen=True)
class SweepRow:
    diameter: float
    bandwidth: float
    nep_diode: float
    nep_total: float
    v_ele: float
    max_clock: float


def sweep_detector_designs(
    pd_base: PhotodiodeSpec,
    amp: AmplifierSpec,
    diameters,
    lo_power: float,
    wavelength: float = 1550e-9,
    duty: float = 0.3,
    const: PhysicalConstants = CONSTANTS,
) -> list[SweepRow]:
    """Evaluate bandwidth, NEP and electronic noise across diode diameters.

    ``bandwidth`` is the junction bandwidth; the receiver runs at
    ``min(B_diode, B_amp)``, the clock at a third of that, and the LO pulse
    lasts ``duty`` of the receiver's inverse bandwidth (0.3 by default, i.e.
    10% of the clock period).
    """
    diameters = np.asarray(diameters, dtype=float)
    if diameters.ndim != 1 or diameters.size == 0:
        raise ValueError("diameters must be a non-empty 1-D sequence")
    if np.any(diameters <= 0) or np.any(np.diff(diameters) <= 0):
        raise ValueError("diameters must be positive and strictly ascending")
    rows = []
    for d in diameters:
        pd = pd_base.with_diameter(float(d))
        b_diode = junction_bandwidth(pd, const)
        nep_d = diode_nep(pd, b_diode, const)
        nep_t = nep_d + amp.nep
        b_rx = min(b_diode, amp.bandwidth)
        tau = duty / b_rx
        rows.append(
            SweepRow(
                diameter=float(d),
                bandwidth=b_diode,
                nep_diode=nep_d,
                nep_total=nep_t,
                v_ele=electronic_noise_variance(nep_t, b_rx, tau, lo_power, wavelength, const),
                max_clock=b_rx / 3.0,
            )
        )
    return rows
