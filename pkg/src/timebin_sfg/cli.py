"""Command-line front end: ``timebin-sfg {spectrum,fringe,chsh,tomo,bounds}``.

Every command writes plot-ready tables plus a JSON report into the output
directory.  Outputs depend only on the configuration and seed.

Exit codes: 0 success, 2 input error, 3 physics-regime error, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import NM, PS, ConfigError, ExperimentConfig, load_config, read_counts, write_counts
from .entangle import EXPERIMENT_CHSH_PHASES, IDLER_LABELS
from .experiment import (
    DEFAULT_IDLER_CURVES,
    run_bounds,
    run_chsh,
    run_fringe,
    run_spectrum,
    run_tomography,
    simulate_tomography_counts,
)
from .pulse import SpectralField, angular_to_wavelength
from .sfg import RegimeError

EXIT_OK, EXIT_FAILURE, EXIT_INPUT, EXIT_REGIME = 0, 1, 2, 3


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def write_table(stem: Path, columns: Sequence[str], rows: Sequence[Sequence[Any]], fmt: str,
                meta: dict | None = None) -> Path:
    """Write ``rows`` as CSV (metadata in ``#`` comment lines) or as column-oriented JSON."""
    meta = meta or {}
    if fmt == "json":
        path = stem.with_suffix(".json")
        cols = {c: [r[i] for r in rows] for i, c in enumerate(columns)}
        write_json(path, {"meta": meta, "columns": list(columns), "data": cols})
        return path
    path = stem.with_suffix(".csv")
    with open(path, "w", newline="") as fh:
        for key in sorted(meta):
            fh.write(f"# {key}={meta[key]}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(x) for x in row])
    return path


def _cell(x: Any) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _nm(x: float | None) -> float | None:
    return None if x is None else x / NM


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _spectrum_rows(field: SpectralField) -> list[tuple[float, float, float]]:
    lam = angular_to_wavelength(field.omega) / NM
    intensity = field.intensity
    peak = intensity.max()
    scaled = intensity / peak if peak > 0 else intensity
    return list(zip(lam.tolist(), field.omega.tolist(), scaled.tolist()))


def cmd_spectrum(config: ExperimentConfig, args: argparse.Namespace) -> dict:
    result = run_spectrum(config)
    meta = {"fingerprint": config.fingerprint()}
    columns = ("wavelength_nm", "angular_frequency_rad_s", "intensity_normalized")
    out = config.output_dir
    files = [
        write_table(out / "spectrum_numeric", columns, _spectrum_rows(result.numeric), args.format, meta),
        write_table(out / "spectrum_analytic", columns, _spectrum_rows(result.analytic), args.format, meta),
    ]
    report = {
        "fingerprint": config.fingerprint(),
        "peaks": [
            {
                "label": p.label,
                "offset": p.offset,
                "pairs": [list(x) for x in p.pairs],
                "central_angular_frequency": p.central_angular_frequency,
                "central_wavelength_nm": p.central_wavelength / NM,
                "rms_width": p.rms_width,
                "fwhm_nm": p.fwhm_wavelength / NM,
                "integrated_intensity": p.integrated_intensity,
            }
            for p in result.peaks
        ],
        "resolved_peaks": result.resolved_peaks,
        "side_displacement_nm": {
            "numeric": _nm(result.side_displacement_numeric),
            "analytic": _nm(result.side_displacement_analytic),
        },
        "middle_fwhm_nm": {
            "intrinsic": _nm(result.middle_fwhm),
            "broadened": _nm(result.middle_fwhm_broadened),
            "broadened_measured": _nm(result.middle_fwhm_broadened_measured),
            "instrument_resolution": _nm(config.resolution),
        },
        "visibility_theoretical": result.visibility,
        "bounds": _bounds_dict(result.bounds),
    }
    files.append(out / "peaks.json")
    write_json(files[-1], report)
    disp = report["side_displacement_nm"]
    print(f"resolved peaks: {result.resolved_peaks}")
    if disp["numeric"] is not None:
        print(f"side displacement: numeric {disp['numeric']:.4f} nm, analytic {disp['analytic']:.4f} nm")
    print(f"middle FWHM: {report['middle_fwhm_nm']['intrinsic']:.4f} nm intrinsic, "
          f"{report['middle_fwhm_nm']['broadened']:.4f} nm broadened")
    return {"files": files}


def _bounds_dict(report) -> dict:
    return {
        "lower_ps": report.lower_bound / PS,
        "upper_ps": report.upper_bound / PS,
        "tau_ps": report.tau / PS,
        "separable": report.separable,
        "interferes": report.interferes,
        "valid": report.valid,
    }


def cmd_bounds(config: ExperimentConfig, args: argparse.Namespace) -> dict:
    report, regime = run_bounds(config)
    payload = _bounds_dict(report) | {"regime_parameter": regime, "fingerprint": config.fingerprint()}
    path = config.output_dir / "bounds.json"
    write_json(path, payload)
    print(f"bounds: {payload['lower_ps']:.4f} ps < tau < {payload['upper_ps']:.3f} ps; "
          f"tau = {payload['tau_ps']:.3f} ps valid={report.valid}")
    return {"files": [path]}


def cmd_fringe(config: ExperimentConfig, args: argparse.Namespace) -> dict:
    result = run_fringe(config, args.idlers, args.beta_steps, args.noiseless)
    out = config.output_dir
    seed = "" if result.seed is None else result.seed
    meta = {"fingerprint": config.fingerprint()}
    beta_pi = (result.betas / math.pi).tolist()
    coinc_rows, singles_rows = [], []
    for curve in result.curves:
        for b, n, s in zip(beta_pi, curve.coincidences.tolist(), curve.singles.tolist()):
            coinc_rows.append((curve.idler, b, n, seed))
            singles_rows.append((curve.idler, b, s, seed))
    files = [
        write_table(out / "fringe_counts", ("idler_basis", "beta_over_pi", "counts", "seed"),
                    coinc_rows, args.format, meta),
        write_table(out / "fringe_singles", ("idler_basis", "beta_over_pi", "counts", "seed"),
                    singles_rows, args.format, meta),
    ]
    report = {
        "fingerprint": config.fingerprint(),
        "noiseless": args.noiseless,
        "seed": result.seed,
        "input_visibility": config.noise.fringe_visibility,
        "mean_visibility": result.mean_visibility,
        "curves": [
            {
                "idler_basis": c.idler,
                "visibility": c.fit.visibility,
                "visibility_error": c.fit.visibility_error,
                "phase": c.fit.phase,
                "offset": c.fit.offset,
                "amplitude": c.fit.amplitude,
                "singles_visibility": c.singles_fit.visibility,
                "singles_chi2": c.singles_chi2,
                "singles_p_value": c.singles_p_value,
            }
            for c in result.curves
        ],
    }
    files.append(out / "fringe_fit.json")
    write_json(files[-1], report)
    for c in result.curves:
        print(f"{c.idler}: V = {c.fit.visibility:.4f}")
    print(f"mean visibility: {result.mean_visibility:.4f}")
    return {"files": files}


def cmd_chsh(config: ExperimentConfig, args: argparse.Namespace) -> dict:
    if args.experiment_phases:
        phases = EXPERIMENT_CHSH_PHASES
    elif args.phases is not None:
        phases = tuple(x * math.pi for x in args.phases)
    else:
        phases = None
    if args.zeta_offset is not None:
        config = replace(config, zeta_offset=args.zeta_offset * math.pi)
    result = run_chsh(config, phases, args.noiseless, args.resamples)
    payload = {
        "fingerprint": config.fingerprint(),
        "phases_over_pi": [x / math.pi for x in result.phases],
        "visibility": config.noise.fringe_visibility,
        "S_noiseless": result.s_ideal,
        "S_measured": result.s_measured,
        "S_mean": result.s_mean,
        "S_std": result.s_std,
        "resamples": result.resamples,
        "seed": result.seed,
        "violation": result.violation,
        "sigmas_above_2": result.sigmas,
    }
    path = config.output_dir / "chsh.json"
    write_json(path, payload)
    line = f"S = {result.s_ideal:.4f} (noiseless)"
    if result.s_measured is not None:
        line += f"; simulated {result.s_measured:.3f} +/- {result.s_std:.3f}"
    print(line + ("; violates" if result.violation else "; no violation") + " CHSH bound 2")
    return {"files": [path]}


def cmd_tomo(config: ExperimentConfig, args: argparse.Namespace) -> dict:
    out = config.output_dir
    files = []
    if args.counts is not None:
        table = read_counts(args.counts)
    else:
        table = simulate_tomography_counts(config, args.noiseless)
        files.append(out / "tomo_counts.csv")
        write_counts(files[-1], table.labels, table.counts)
    result = run_tomography(config, table, resamples=args.resamples)
    rho = result.reconstruction.rho
    payload = {
        "fingerprint": config.fingerprint(),
        "basis": ["He", "Hl", "Ve", "Vl"],
        "real": rho.real,
        "imag": rho.imag,
        "fidelity_phi_tilde_plus": result.fidelity,
        "purity": result.purity,
        "iterations": result.reconstruction.iterations,
        "converged": result.reconstruction.converged,
        "errors": {
            e.metric: asdict(e) for e in (result.fidelity_error, result.purity_error) if e is not None
        },
        "seed": result.seed,
        "source": "file" if args.counts is not None else ("noiseless" if args.noiseless else "simulated"),
    }
    files.append(out / "density_matrix.json")
    write_json(files[-1], payload)
    line = f"fidelity {result.fidelity:.4f}, purity {result.purity:.4f}"
    if result.fidelity_error is not None:
        line += f" (+/- {result.fidelity_error.std:.4f}, {result.purity_error.std:.4f})"
    print(line)
    return {"files": files}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="experiment TOML file (default: packaged experimental values)")
    p.add_argument("--seed", type=int, help="override the noise seed")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--visibility", type=float, help="two-photon fringe visibility of the source")
    p.add_argument("--counts-mean", type=float, help="mean counts per setting")
    p.add_argument("--tau-ps", type=float, help="override the time-bin spacing in ps")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="timebin-sfg", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="SFG spectra and peak report")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("bounds", parents=[common], help="bin-spacing separability window")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("fringe", parents=[common], help="coincidence fringes versus pump phase")
    p.add_argument("--idlers", nargs="+", choices=IDLER_LABELS, default=list(DEFAULT_IDLER_CURVES),
                   help="idler polarization analysers")
    p.add_argument("--beta-steps", type=int, default=24, help="pump-phase points per period")
    p.add_argument("--noiseless", action="store_true", help="write expected instead of Poisson counts")
    p.set_defaults(func=cmd_fringe)

    p = sub.add_parser("chsh", parents=[common], help="CHSH parameter with Monte-Carlo spread")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--phases", type=float, nargs=4, metavar=("XI_A", "XI_A2", "ZETA_B", "ZETA_B2"),
                   help="analyser phases in units of pi")
    g.add_argument("--experiment-phases", action="store_true", help="use the experimental angle set")
    p.add_argument("--zeta-offset", type=float, help="signal phase offset in units of pi")
    p.add_argument("--resamples", type=int, default=400)
    p.add_argument("--noiseless", action="store_true")
    p.set_defaults(func=cmd_chsh)

    p = sub.add_parser("tomo", parents=[common], help="maximum-likelihood state tomography")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--counts", type=Path, help="counts CSV to reconstruct")
    g.add_argument("--simulate", action="store_true", help="simulate the 36-setting data set")
    p.add_argument("--noiseless", action="store_true", help="simulate expected counts exactly")
    p.add_argument("--resamples", type=int, default=400, help="Monte-Carlo resamples (0 disables)")
    p.set_defaults(func=cmd_tomo)
    return parser


def configure(args: argparse.Namespace) -> ExperimentConfig:
    """Load the config file and apply command-line overrides."""
    config = load_config(args.config)
    noise = {}
    if args.seed is not None:
        noise["seed"] = args.seed
    if args.visibility is not None:
        noise["fringe_visibility"] = args.visibility
    if args.counts_mean is not None:
        noise["counts_per_setting_mean"] = args.counts_mean
    if noise:
        config = config.with_noise(**noise)
    if args.tau_ps is not None:
        config = config.with_bin_spacing(args.tau_ps * PS)
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    if config.output_dir.exists() and not config.output_dir.is_dir():
        raise ConfigError(f"output path {config.output_dir} is not a directory")
    config.output_dir.mkdir(parents=True, exist_ok=True)
    return config


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = configure(args)
        args.func(config, args)
    except RegimeError as exc:
        print(f"timebin-sfg: regime error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (ConfigError, ValueError, OSError) as exc:
        print(f"timebin-sfg: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - report, never abort silently
        print(f"timebin-sfg: unexpected {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
