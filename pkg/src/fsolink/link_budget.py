"""Satellite-to-ground downlink: launch, vacuum leg, turbulent split-step,
receiver, and Monte Carlo loss budget.

Geometry of one run:

1. A Gaussian beam is launched from the satellite and carried through
   vacuum to the top of the atmosphere with the scaled Fresnel transform,
   evaluated directly on the atmospheric grid.
2. The atmospheric grid is a fixed window centred on the receiver.  It is
   far smaller than the ~20 m arriving beam but much larger than the
   aperture plus the lateral spread that diffraction and turbulence can
   cause over the atmospheric path, so the field near the aperture is
   unaffected by the window edges.
3. The field is stepped down through the slices with the angular-spectrum
   propagator, picking up one phase screen at the midpoint of each slice.
4. At the ground the receiver aperture and focusing optics form the focal
   field, which is coupled into each target.

Turbulence losses are referenced to the power through the aperture, and
diffraction losses to the launched power.
"""

from __future__ import annotations

import functools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import SamplingError, SimulationError
from .optics import (
    ComplexField,
    GaussianBeamSpec,
    apply_circular_aperture,
    gaussian_aperture_transmission,
    make_gaussian_beam,
    max_angular_spectrum_distance,
    propagate_vacuum,
    total_power,
)
from .receiver import (
    CouplingTarget,
    ReceiverSpec,
    SingleModeFiber,
    SquareDetector,
    coupling_efficiency,
    focal_field,
)
from .turbulence import (
    AtmosphereSlicing,
    HVProfile,
    derive_seed,
    generate_phase_screen,
    slice_atmosphere,
)

__all__ = [
    "ScenarioConfig",
    "TrialResult",
    "TargetSummary",
    "LinkBudgetReport",
    "prepare_scenario",
    "run_turbulent_trial",
    "monte_carlo_link_budget",
    "build_report",
    "to_db",
]


def to_db(fraction: float) -> float:
    """Loss in dB for a linear transmission fraction."""
    if fraction <= 0:
        return math.inf
    return 0.0 - 10.0 * math.log10(fraction)


@dataclass(frozen=True)
class ScenarioConfig:
    """Downlink scenario; every length in meters.

    ``range`` is the slant distance from the satellite to the receiver.
    ``grid_n`` x ``grid_dx`` is the receiver-centred atmospheric window and
    ``source_n`` the launch grid (its pitch is an eighth of the waist).
    """

    launch: GaussianBeamSpec = GaussianBeamSpec(0.0355, 1.0, 1550e-9)
    range: float = 700e3
    elevation: float = 90.0
    profile: HVProfile = HVProfile()
    n_slices: int = 14
    slicing: str = "equal_strength"
    atmosphere_top: float = 30e3
    outer_scale: float = 25.0
    inner_scale: float = 0.01
    subharmonics: int = 3
    rx: ReceiverSpec = ReceiverSpec()
    targets: tuple = (SingleModeFiber(10e-6), SquareDetector(1e-3))
    n_trials: int = 200
    master_seed: int = 20200
    grid_n: int = 512
    grid_dx: float = 0.01
    source_n: int = 64

    def __post_init__(self):
        if not 0 < self.elevation <= 90:
            raise ValueError("elevation must be in (0, 90] degrees")
        path = self.atmosphere_top / math.sin(math.radians(self.elevation))
        if not self.range > path:
            raise ValueError(f"range must exceed the atmospheric path length {path:.6g} m")
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        if self.n_slices < 1:
            raise ValueError("n_slices must be at least 1")
        for name in ("grid_n", "source_n"):
            v = getattr(self, name)
            if v < 2 or v & (v - 1):
                raise ValueError(f"{name} must be a power of two, got {v}")
        if not self.grid_dx > 0:
            raise ValueError("grid_dx must be positive")
        if not self.outer_scale > self.inner_scale >= 0:
            raise ValueError("need outer_scale > inner_scale >= 0")
        if not self.targets:
            raise ValueError("at least one coupling target is required")
        labels = [t.label for t in self.targets]
        if len(set(labels)) != len(labels):
            raise ValueError(f"coupling targets must be distinct, got {labels}")

    @property
    def wavelength(self) -> float:
        return self.launch.wavelength

    @property
    def atmospheric_path(self) -> float:
        return self.atmosphere_top / math.sin(math.radians(self.elevation))


@dataclass(frozen=True, eq=False)
class _Prepared:
    slicing: AtmosphereSlicing
    hops: tuple  # (distance, slice index or None), top of atmosphere first
    top_field: ComplexField
    vacuum_ground: ComplexField
    vacuum_aperture_fraction: float
    reference_efficiency: dict


def _hops(slicing: AtmosphereSlicing, path: float):
    dist = slicing.screen_distances()
    order = sorted(range(len(dist)), key=lambda i: -dist[i])
    hops, here = [], path
    for i in order:
        hops.append((here - dist[i], i))
        here = dist[i]
    hops.append((here, None))
    return tuple(hops)


def _check_grid(cfg: ScenarioConfig, slicing: AtmosphereSlicing, hops) -> None:
    window = cfg.grid_n * cfg.grid_dx
    if window < 4 * cfg.rx.aperture_diameter:
        raise SamplingError(
            f"atmospheric window {window:.3g} m must be at least 4 receiver apertures "
            f"({4 * cfg.rx.aperture_diameter:.3g} m)"
        )
    finite = [s.r0 for s in slicing.slices if math.isfinite(s.r0)]
    if finite and cfg.grid_dx > min(finite) / 3:
        raise SamplingError(
            f"grid pitch {cfg.grid_dx:.4g} m does not resolve r0/3 of the strongest "
            f"slice ({min(finite) / 3:.4g} m)"
        )
    zmax = max_angular_spectrum_distance(cfg.grid_n, cfg.grid_dx, cfg.wavelength)
    longest = max(h for h, _ in hops)
    if longest > zmax:
        raise SamplingError(
            f"longest atmospheric hop {longest:.6g} m exceeds the angular-spectrum limit "
            f"{zmax:.6g} m; increase grid_n or grid_dx"
        )


def _receive(cfg: ScenarioConfig, ground: ComplexField, r0: float | None):
    pupil_power = total_power(apply_circular_aperture(ground, cfg.rx.aperture_diameter))
    focal = focal_field(ground, cfg.rx, r0=r0)
    eff = {t.label: coupling_efficiency(focal, t, reference_power=pupil_power) for t in cfg.targets}
    return pupil_power, eff


@functools.lru_cache(maxsize=8)
def prepare_scenario(cfg: ScenarioConfig) -> _Prepared:
    """Deterministic, trial-independent setup shared by every trial."""
    slicing = slice_atmosphere(
        cfg.profile, cfg.n_slices, cfg.elevation, cfg.atmosphere_top, cfg.wavelength, cfg.slicing
    )
    path = cfg.atmospheric_path
    hops = _hops(slicing, path)
    _check_grid(cfg, slicing, hops)

    src_dx = cfg.launch.waist_radius / 8.0
    beam = make_gaussian_beam(cfg.launch, cfg.source_n, src_dx)
    top = propagate_vacuum(beam, cfg.range - path, dx_out=cfg.grid_dx, n_out=cfg.grid_n)

    ground = top
    for hop, _ in hops:
        ground = propagate_vacuum(ground, hop)
    pupil_power, eff = _receive(cfg, ground, slicing.r0)
    return _Prepared(
        slicing=slicing,
        hops=hops,
        top_field=top,
        vacuum_ground=ground,
        vacuum_aperture_fraction=pupil_power / cfg.launch.power,
        reference_efficiency=eff,
    )


@dataclass(frozen=True)
class TrialResult:
    trial: int
    screen_seeds: tuple
    aperture_fraction: float
    efficiencies: dict

    def total_transmission(self, label: str) -> float:
        return self.aperture_fraction * self.efficiencies[label]


def run_turbulent_trial(cfg: ScenarioConfig, trial: int) -> TrialResult:
    """One realization: fresh screens seeded from ``(master_seed, trial, slice)``."""
    prep = prepare_scenario(cfg)
    u = prep.top_field
    seeds = []
    for hop, idx in prep.hops:
        u = propagate_vacuum(u, hop)
        if idx is None:
            continue
        seed = derive_seed(cfg.master_seed, trial, idx)
        seeds.append(seed)
        screen = generate_phase_screen(
            prep.slicing.slices[idx].r0,
            cfg.outer_scale,
            cfg.inner_scale,
            cfg.grid_n,
            cfg.grid_dx,
            seed,
            subharmonics=cfg.subharmonics,
            check_window=False,
        )
        u = u.replace(u.samples * np.exp(1j * screen.phase))
    pupil_power, eff = _receive(cfg, u, prep.slicing.r0)
    return TrialResult(
        trial=int(trial),
        screen_seeds=tuple(seeds),
        aperture_fraction=pupil_power / cfg.launch.power,
        efficiencies=eff,
    )


@dataclass(frozen=True)
class TargetSummary:
    label: str
    mean_efficiency: float
    efficiency_stderr: float
    turbulence_loss_db: float
    turbulence_loss_stderr_db: float
    mean_of_db: float
    reference_efficiency: float
    excess_turbulence_loss_db: float
    total_loss_db: float


@dataclass(frozen=True)
class LinkBudgetReport:
    diffraction_fraction: float
    diffraction_fraction_analytic: float
    diffraction_loss_db: float
    mean_aperture_fraction: float
    r0: float
    targets: tuple
    trials: tuple
    scenario: dict = field(default_factory=dict)

    def target(self, label: str) -> TargetSummary:
        for t in self.targets:
            if t.label == label:
                return t
        raise KeyError(label)

    def to_dict(self) -> dict:
        return {
            "diffraction_fraction": self.diffraction_fraction,
            "diffraction_fraction_analytic": self.diffraction_fraction_analytic,
            "diffraction_loss_db": self.diffraction_loss_db,
            "mean_aperture_fraction": self.mean_aperture_fraction,
            "r0_m": self.r0,
            "targets": [asdict(t) for t in self.targets],
            "trials": [
                {
                    "trial": t.trial,
                    "screen_seeds": list(t.screen_seeds),
                    "aperture_fraction": t.aperture_fraction,
                    "efficiencies": dict(t.efficiencies),
                }
                for t in self.trials
            ],
            "scenario": self.scenario,
        }


def _summarize(label: str, etas: list[float], reference: float, diffraction_db: float) -> TargetSummary:
    n = len(etas)
    mean = math.fsum(etas) / n
    if n > 1:
        var = math.fsum((e - mean) ** 2 for e in etas) / (n - 1)
        se = math.sqrt(var / n)
    else:
        se = 0.0
    loss = to_db(mean)
    se_db = 10.0 / math.log(10.0) * se / mean if mean > 0 else math.inf
    floor = 1e-300
    mean_of_db = math.fsum(to_db(max(e, floor)) for e in etas) / n
    excess = to_db(mean / reference) if reference > 0 and mean > 0 else math.inf
    return TargetSummary(
        label=label,
        mean_efficiency=mean,
        efficiency_stderr=se,
        turbulence_loss_db=loss,
        turbulence_loss_stderr_db=se_db,
        mean_of_db=mean_of_db,
        reference_efficiency=reference,
        excess_turbulence_loss_db=excess,
        total_loss_db=diffraction_db + loss,
    )


def monte_carlo_link_budget(cfg: ScenarioConfig, threads: int = 1, progress=None) -> LinkBudgetReport:
    """Average ``n_trials`` turbulent trials into a loss budget.

    The turbulence loss of a target is ``-10 log10(mean efficiency)``; the
    mean of per-trial dB values is kept as a diagnostic.  Trials may run on
    ``threads`` workers (0 picks the CPU count); results are reduced in
    trial order with exact summation, so the report does not depend on the
    thread count.
    """
    prepare_scenario(cfg)  # grid errors surface here, before any trial runs

    def one(trial):
        try:
            return run_turbulent_trial(cfg, trial)
        except Exception as exc:  # noqa: BLE001 - rewrapped with the reproducing seed
            raise SimulationError(
                f"trial {trial} failed (master_seed={cfg.master_seed}): {exc}",
                trial=trial,
                seed=cfg.master_seed,
            ) from exc

    if threads == 0:
        threads = os.cpu_count() or 1
    indices = range(cfg.n_trials)
    results = []
    if threads <= 1:
        for t in indices:
            results.append(one(t))
            if progress:
                progress(len(results), cfg.n_trials)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for res in pool.map(one, indices):
                results.append(res)
                if progress:
                    progress(len(results), cfg.n_trials)

    return build_report(cfg, results)


def build_report(cfg: ScenarioConfig, results) -> LinkBudgetReport:
    """Reduce trial results (in any order) into a report for ``cfg``."""
    results = sorted(results, key=lambda r: r.trial)
    if not results:
        raise ValueError("need at least one trial result")
    prep = prepare_scenario(cfg)
    diffraction = prep.vacuum_aperture_fraction
    diff_db = to_db(diffraction)
    analytic = gaussian_aperture_transmission(
        cfg.launch.radius_at(cfg.range), cfg.rx.aperture_diameter / 2.0
    )
    summaries = tuple(
        _summarize(
            t.label,
            [r.efficiencies[t.label] for r in results],
            prep.reference_efficiency[t.label],
            diff_db,
        )
        for t in cfg.targets
    )
    return LinkBudgetReport(
        diffraction_fraction=diffraction,
        diffraction_fraction_analytic=analytic,
        diffraction_loss_db=diff_db,
        mean_aperture_fraction=math.fsum(r.aperture_fraction for r in results) / len(results),
        r0=prep.slicing.r0,
        targets=summaries,
        trials=tuple(results),
        scenario=_scenario_dict(cfg),
    )


def _scenario_dict(cfg: ScenarioConfig) -> dict:
    out = asdict(cfg)
    out["targets"] = [{"kind": type(t).__name__, **asdict(t)} for t in cfg.targets]
    return out
