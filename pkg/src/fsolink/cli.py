"""Command-line entry point.

    fsolink link-budget    [--config PATH] [--out DIR] [--seed N] [--trials N] [--threads N]
    fsolink sweep-detector [--config PATH] [--out DIR]
    fsolink phase-screen   [--config PATH] [--out DIR] [--seed N]
    fsolink shot-noise     [--config PATH] [--out DIR] [--seed N]

Exit status: 0 on success, 2 for configuration or sampling errors, 3 when a
simulation trial fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .config import RunConfig, load_config, unit_conversions
from .detector import sweep_detector_designs
from .errors import ConfigError, SamplingError, SimulationError
from .homodyne import shot_noise_calibration_curve
from .link_budget import LinkBudgetReport, monte_carlo_link_budget, to_db
from .turbulence import generate_phase_screen

THREADS_ENV = "FSOLINK_THREADS"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3


def _finite(obj):
    # JSON has no inf/nan; map them to null
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _write_json(path: Path, payload) -> None:
    text = json.dumps(_finite(payload), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def resolve_threads(flag: int | None) -> int:
    """``--threads`` wins; otherwise the environment variable; otherwise 1."""
    if flag is not None:
        n = flag
    else:
        raw = os.environ.get(THREADS_ENV)
        if raw is None or raw.strip() == "":
            return 1
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(THREADS_ENV, f"must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("--threads", f"must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


def summary_text(report: LinkBudgetReport) -> str:
    n = len(report.trials)
    lines = [
        f"trials: {n}",
        f"Fried parameter r0: {report.r0 * 100:.2f} cm",
        f"diffraction loss: {report.diffraction_loss_db:.2f} dB "
        f"(grid fraction {report.diffraction_fraction:.4e}, analytic {report.diffraction_fraction_analytic:.4e})",
    ]
    for t in report.targets:
        lines.append(
            f"{t.label}: turbulence loss {t.turbulence_loss_db:.2f} +/- {t.turbulence_loss_stderr_db:.2f} dB, "
            f"total {t.total_loss_db:.2f} dB "
            f"(mean efficiency {t.mean_efficiency:.4e}, no-turbulence {t.reference_efficiency:.4f}, "
            f"mean of per-trial dB {t.mean_of_db:.2f})"
        )
    return "\n".join(lines) + "\n"


def run_link_budget(cfg: RunConfig, out: Path, threads: int = 1) -> LinkBudgetReport:
    report = monte_carlo_link_budget(cfg.scenario(), threads=threads)
    labels = [t.label for t in report.targets]
    _write_json(
        out / "report.json",
        {"config": cfg.to_mapping(), "unit_conversions": unit_conversions(cfg), "report": report.to_dict()},
    )
    rows = []
    for r in report.trials:
        row = [r.trial, cfg.master_seed, r.aperture_fraction]
        for lab in labels:
            eta = r.efficiencies[lab]
            row += [eta, to_db(eta), r.total_transmission(lab)]
        rows.append(row)
    header = ["trial", "master_seed", "aperture_fraction"]
    for lab in labels:
        header += [f"eta_{lab}", f"loss_db_{lab}", f"total_transmission_{lab}"]
    _write_csv(out / "trials.csv", header, rows)
    (out / "summary.txt").write_text(summary_text(report), encoding="utf-8")
    return report


def run_detector_sweep(cfg: RunConfig, out: Path):
    rows = sweep_detector_designs(
        cfg.photodiode(),
        cfg.amplifier(),
        cfg.detector_diameters(),
        cfg.lo_power_uw / 1e6,
        cfg.wavelength_nm / 1e9,
        cfg.pulse_duty_fraction,
    )
    _write_csv(
        out / "sweep.csv",
        ["diameter_mm", "bandwidth_hz", "nep_diode_w_rthz", "nep_total_w_rthz", "v_ele_snu", "max_clock_hz"],
        [
            (mm, r.bandwidth, r.nep_diode, r.nep_total, r.v_ele, r.max_clock)
            for mm, r in zip(cfg.pd_diameters_mm, rows)
        ],
    )
    _write_json(out / "sweep_units.json", {"config": cfg.to_mapping(), "unit_conversions": unit_conversions(cfg)})
    return rows


def run_phase_screen(cfg: RunConfig, out: Path):
    screen = generate_phase_screen(
        cfg.screen_r0_cm / 100,
        cfg.outer_scale_m,
        cfg.inner_scale_cm / 100,
        cfg.screen_n,
        cfg.screen_dx_cm / 100,
        cfg.master_seed,
        subharmonics=cfg.subharmonic_levels,
    )
    with open(out / "phase_screen.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in screen.phase:
            w.writerow([repr(float(v)) for v in row])
    _write_json(
        out / "phase_screen.json",
        {
            "config": cfg.to_mapping(),
            "r0_m": screen.r0,
            "dx_m": screen.dx,
            "n": screen.n,
            "outer_scale_m": screen.outer_scale,
            "inner_scale_m": screen.inner_scale,
            "seed": screen.seed,
        },
    )
    return screen


def run_shot_noise(cfg: RunConfig, out: Path):
    curve = shot_noise_calibration_curve(cfg.homodyne(), cfg.hd_lo_levels_photons)
    _write_csv(
        out / "shot_noise.csv",
        ["lo_photons", "raw_variance", "normalized_variance", "ele_ratio"],
        [(p.lo_photons, p.raw_variance, p.normalized_variance, p.ele_ratio) for p in curve.points],
    )
    _write_json(
        out / "shot_noise_fit.json",
        {
            "config": cfg.to_mapping(),
            "slope": curve.slope,
            "slope_stderr": curve.slope_stderr,
            "intercept": curve.intercept,
            "intercept_stderr": curve.intercept_stderr,
            "r_squared": curve.r_squared,
            "electronic_variance_lo_off": curve.electronic_variance,
            "electronic_variance_lo_off_stderr": curve.electronic_variance_stderr,
        },
    )
    return curve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fsolink", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("link-budget", "Monte Carlo downlink loss budget"),
        ("sweep-detector", "photodiode bandwidth / NEP / electronic noise versus diameter"),
        ("phase-screen", "dump one phase screen as CSV"),
        ("shot-noise", "simulated shot-noise calibration curve"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, default=None, help="YAML file of key: value overrides")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory (created if missing)")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--trials", type=int, default=None, help="override n_trials")
        p.add_argument("--threads", type=int, default=None, help=f"worker threads, 0 = all CPUs (env {THREADS_ENV})")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.trials is not None:
            overrides["n_trials"] = args.trials
        if overrides:
            cfg = cfg.replace(**overrides)
        threads = resolve_threads(args.threads)
        try:
            args.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError("--out", f"cannot create {args.out}: {exc.strerror}") from exc

        if args.command == "link-budget":
            report = run_link_budget(cfg, args.out, threads)
            sys.stdout.write(summary_text(report))
        elif args.command == "sweep-detector":
            rows = run_detector_sweep(cfg, args.out)
            print(f"wrote {len(rows)} rows to {args.out / 'sweep.csv'}")
        elif args.command == "phase-screen":
            run_phase_screen(cfg, args.out)
            print(f"wrote {args.out / 'phase_screen.csv'}")
        else:
            curve = run_shot_noise(cfg, args.out)
            print(f"slope {curve.slope:.6g}, intercept {curve.intercept:.6g}, R^2 {curve.r_squared:.6f}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SamplingError as exc:
        print(f"sampling error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
