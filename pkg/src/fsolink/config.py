"""Flat, unit-annotated run configuration.

Every key carries its unit in the name (``range_km``, ``lo_power_uw``) and
is optional; the defaults reproduce the 700 km zenith downlink and the
InGaAs photodiode used for the detector trade-off.  Values are converted
to SI here and nowhere else.  Unknown keys and out-of-range values raise
:class:`ConfigError` naming the key.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import yaml

from .detector import AmplifierSpec, PhotodiodeSpec
from .errors import ConfigError
from .homodyne import HomodyneConfig
from .link_budget import ScenarioConfig
from .optics import GaussianBeamSpec
from .receiver import CircularDetector, ReceiverSpec, SingleModeFiber, SquareDetector
from .turbulence import HVProfile

__all__ = ["RunConfig", "load_config", "parse_config", "unit_conversions"]


def _si(value, exponent: int) -> float:
    # scale by 10**exponent; dividing by an exact power of ten rounds correctly
    return value * 10.0**exponent if exponent >= 0 else value / 10.0**-exponent


def _k(default, check: str = "positive", choices=None):
    return field(default=default, metadata={"check": check, "choices": choices})


def _default_diameters():
    return tuple(round(0.1 * i, 1) for i in range(1, 31))


@dataclass(frozen=True)
class RunConfig:
    # launch and geometry
    wavelength_nm: float = _k(1550.0)
    launch_diameter_cm: float = _k(7.1)
    launch_power_w: float = _k(1.0, "nonnegative")
    range_km: float = _k(700.0)
    elevation_deg: float = _k(90.0, "elevation")
    atmosphere_top_km: float = _k(30.0)
    # turbulence
    hv_ground_cn2_m23: float = _k(1e-13, "nonnegative")
    hv_wind_rms_m_s: float = _k(21.0, "nonnegative")
    hv_background_cn2_m23: float = _k(2.7e-16, "nonnegative")
    n_slices: int = _k(14, "count")
    slicing: str = _k("equal_strength", "choice", ("equal_strength", "equal_thickness"))
    outer_scale_m: float = _k(25.0)
    inner_scale_cm: float = _k(1.0, "nonnegative")
    subharmonic_levels: int = _k(3, "count0")
    # receiver
    aperture_diameter_cm: float = _k(35.5)
    focal_length_mm: float = _k(1600.0)
    fiber_mfd_um: float = _k(10.0)
    detector_shape: str = _k("square", "choice", ("square", "circular"))
    detector_size_mm: float = _k(1.0)
    # Monte Carlo and grids
    n_trials: int = _k(200, "count")
    master_seed: int = _k(20200, "seed")
    grid_n: int = _k(512, "pow2")
    grid_dx_cm: float = _k(1.0)
    source_n: int = _k(64, "pow2")
    # photodiode, in the units the device parameters are usually quoted in
    pd_diameters_mm: tuple = _k(_default_diameters(), "ascending")
    pd_load_ohm: float = _k(50.0)
    pd_mobility_cm2_vs: float = _k(1e4)
    pd_resistivity_ohm_cm: float = _k(0.142)
    pd_built_in_v: float = _k(0.77, "real")
    pd_bias_v: float = _k(6.0, "real")
    pd_dielectric: float = _k(13.9)
    pd_intrinsic_density_cm3: float = _k(6.3e11)
    pd_acceptor_density_cm3: float = _k(1.2e31)
    pd_temperature_k: float = _k(300.0)
    pd_minority_mobility_cm2_vs: float = _k(250.0)
    pd_minority_lifetime_fs: float = _k(270.0)
    pd_base_thickness_cm: float = _k(55.0)
    pd_diffusion_length_nm: float = _k(14.0)
    pd_quantum_efficiency: float = _k(0.95, "fraction")
    pd_exponent_v: float = _k(0.77, "nonnegative")
    amp_nep_w_rthz: float = _k(5e-12)
    amp_bandwidth_mhz: float = _k(10.0)
    lo_power_uw: float = _k(13.0)
    pulse_duty_fraction: float = _k(0.3, "fraction")
    # homodyne calibration
    hd_lo_photons: float = _k(5e8)
    hd_electronic_variance_snu: float = _k(1e-4, "nonnegative")
    hd_signal_variance_snu: float = _k(0.0, "nonnegative")
    hd_pulse_width_ns: float = _k(30.0)
    hd_samples: int = _k(1_000_000, "samples")
    hd_lo_levels_photons: tuple = _k((5e7, 1e8, 2e8, 3e8, 4e8, 5e8), "ascending")
    # phase-screen dump
    screen_r0_cm: float = _k(10.0)
    screen_n: int = _k(256, "pow2")
    screen_dx_cm: float = _k(1.0)

    def __post_init__(self):
        for f in fields(self):
            _check(f.name, getattr(self, f.name), f.metadata["check"], f.metadata["choices"])
        if not self.outer_scale_m > _si(self.inner_scale_cm, -2):
            raise ConfigError("outer_scale_m", "must exceed the inner scale")
        if self.pd_built_in_v + self.pd_bias_v <= 0:
            raise ConfigError("pd_bias_v", "pd_built_in_v + pd_bias_v must be positive")
        path = self.atmosphere_top_km / math.sin(math.radians(self.elevation_deg))
        if not self.range_km > path:
            raise ConfigError("range_km", f"must exceed the atmospheric path of {path:.6g} km")
        if len(set(self.hd_lo_levels_photons)) < 3:
            raise ConfigError("hd_lo_levels_photons", "need at least three distinct LO levels")

    # -- domain objects ------------------------------------------------------

    def launch(self) -> GaussianBeamSpec:
        return GaussianBeamSpec(_si(self.launch_diameter_cm, -2) / 2.0, self.launch_power_w, _si(self.wavelength_nm, -9))

    def profile(self) -> HVProfile:
        return HVProfile(self.hv_ground_cn2_m23, self.hv_wind_rms_m_s, self.hv_background_cn2_m23)

    def receiver(self) -> ReceiverSpec:
        return ReceiverSpec(_si(self.aperture_diameter_cm, -2), _si(self.focal_length_mm, -3))

    def targets(self) -> tuple:
        size = _si(self.detector_size_mm, -3)
        det = SquareDetector(size) if self.detector_shape == "square" else CircularDetector(size)
        return (SingleModeFiber(_si(self.fiber_mfd_um, -6)), det)

    def scenario(self) -> ScenarioConfig:
        return ScenarioConfig(
            launch=self.launch(),
            range=_si(self.range_km, 3),
            elevation=self.elevation_deg,
            profile=self.profile(),
            n_slices=self.n_slices,
            slicing=self.slicing,
            atmosphere_top=_si(self.atmosphere_top_km, 3),
            outer_scale=self.outer_scale_m,
            inner_scale=_si(self.inner_scale_cm, -2),
            subharmonics=self.subharmonic_levels,
            rx=self.receiver(),
            targets=self.targets(),
            n_trials=self.n_trials,
            master_seed=self.master_seed,
            grid_n=self.grid_n,
            grid_dx=_si(self.grid_dx_cm, -2),
            source_n=self.source_n,
        )

    def photodiode(self) -> PhotodiodeSpec:
        conv = unit_conversions(self)
        return PhotodiodeSpec(**{v["field"]: v["si_value"] for v in conv.values()})

    def amplifier(self) -> AmplifierSpec:
        return AmplifierSpec(self.amp_nep_w_rthz, _si(self.amp_bandwidth_mhz, 6))

    def detector_diameters(self) -> tuple:
        return tuple(_si(d, -3) for d in self.pd_diameters_mm)

    def homodyne(self) -> HomodyneConfig:
        return HomodyneConfig(
            lo_photons=self.hd_lo_photons,
            pulse_width=_si(self.hd_pulse_width_ns, -9),
            wavelength=_si(self.wavelength_nm, -9),
            signal_variance=self.hd_signal_variance_snu,
            electronic_variance=self.hd_electronic_variance_snu,
            samples=self.hd_samples,
            seed=self.master_seed,
        )

    def to_mapping(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    def replace(self, **changes) -> "RunConfig":
        return parse_config({**self.to_mapping(), **changes})


# (config key, PhotodiodeSpec field, power of ten to SI, SI unit)
_PD_UNITS = (
    ("pd_diameters_mm", "diameter", -3, "m"),
    ("pd_load_ohm", "load_resistance", 0, "ohm"),
    ("pd_mobility_cm2_vs", "mobility", -4, "m^2/(V s)"),
    ("pd_resistivity_ohm_cm", "resistivity", -2, "ohm m"),
    ("pd_built_in_v", "built_in_voltage", 0, "V"),
    ("pd_bias_v", "bias_voltage", 0, "V"),
    ("pd_dielectric", "dielectric_constant", 0, "1"),
    ("pd_intrinsic_density_cm3", "intrinsic_density", 6, "m^-3"),
    ("pd_acceptor_density_cm3", "acceptor_density", 6, "m^-3"),
    ("pd_temperature_k", "temperature", 0, "K"),
    ("pd_minority_mobility_cm2_vs", "minority_mobility", -4, "m^2/(V s)"),
    ("pd_minority_lifetime_fs", "minority_lifetime", -15, "s"),
    ("pd_base_thickness_cm", "base_thickness", -2, "m"),
    ("pd_diffusion_length_nm", "diffusion_length", -9, "m"),
    ("pd_quantum_efficiency", "quantum_efficiency", 0, "1"),
    ("pd_exponent_v", "exponent_voltage", 0, "V"),
)


def unit_conversions(cfg: RunConfig) -> dict:
    """Photodiode parameters as configured and as handed to the SI core.

    The diameter entry uses the first sweep diameter.
    """
    out = {}
    for key, name, exponent, unit in _PD_UNITS:
        value = getattr(cfg, key)
        if isinstance(value, tuple):
            value = value[0]
        out[key] = {"field": name, "value": value, "si_exponent": exponent, "si_value": _si(value, exponent), "si_unit": unit}
    return out


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check(key, value, check, choices):
    if check == "choice":
        if value not in choices:
            raise ConfigError(key, f"must be one of {', '.join(choices)}, got {value!r}")
        return
    if check == "ascending":
        if not value or not all(_is_number(v) and math.isfinite(v) and v > 0 for v in value):
            raise ConfigError(key, "must be a non-empty list of positive numbers")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ConfigError(key, "must be strictly ascending")
        return
    if check in ("count", "count0", "pow2", "seed", "samples"):
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(key, f"must be an integer, got {value!r}")
        low = {"count": 1, "count0": 0, "pow2": 2, "seed": 0, "samples": 2}[check]
        if value < low:
            raise ConfigError(key, f"must be at least {low}, got {value}")
        if check == "pow2" and value & (value - 1):
            raise ConfigError(key, f"must be a power of two, got {value}")
        if check == "seed" and value >= 2**64:
            raise ConfigError(key, "must fit in 64 bits")
        return
    if not _is_number(value) or not math.isfinite(value):
        raise ConfigError(key, f"must be a finite number, got {value!r}")
    if check == "positive" and not value > 0:
        raise ConfigError(key, f"must be positive, got {value}")
    if check == "nonnegative" and not value >= 0:
        raise ConfigError(key, f"must be non-negative, got {value}")
    if check == "fraction" and not 0 < value <= 1:
        raise ConfigError(key, f"must lie in (0, 1], got {value}")
    if check == "elevation" and not 0 < value <= 90:
        raise ConfigError(key, f"must lie in (0, 90] degrees, got {value}")


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _as_float(value):
    # YAML 1.1 reads exponents without a decimal point (1e-13) as strings
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            return value
    return float(value) if _is_number(value) else value


def parse_config(mapping) -> RunConfig:
    if mapping is None:
        mapping = {}
    if not isinstance(mapping, dict):
        raise ConfigError("<root>", "configuration must be a mapping of key: value pairs")
    kwargs = {}
    for key, value in mapping.items():
        if key not in _FIELDS:
            raise ConfigError(str(key), "unknown configuration key")
        default = _FIELDS[key].default
        if isinstance(default, tuple):
            if not isinstance(value, (list, tuple)):
                raise ConfigError(key, "must be a list")
            value = tuple(_as_float(v) for v in value)
        elif isinstance(default, float):
            value = _as_float(value)
        kwargs[key] = value
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    """Read a YAML file of flat ``key: value`` pairs; ``None`` gives the defaults."""
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError("--config", f"malformed YAML in {path}: {exc}") from exc
    return parse_config(data)
