"""Experiment configuration files, projector files and the tomography counts table."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .entangle import NoiseModel
from .measurement import ProjectorSpec
from .pulse import ChirpedPulseSpec, normalize_coefficients

FS2 = 1e-30
PS = 1e-12
NM = 1e-9


class ConfigError(ValueError):
    """Malformed or inconsistent input file."""


def coefficients_from_pairs(pairs: Sequence[Sequence[float]]) -> tuple[complex, ...]:
    """(magnitude, phase / pi) pairs -> normalized complex amplitudes."""
    try:
        raw = [float(m) * np.exp(1j * math.pi * float(ph)) for m, ph in pairs]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"coefficients must be [magnitude, phase_over_pi] pairs: {exc}") from None
    if not raw:
        raise ConfigError("at least one coefficient pair is required")
    try:
        return normalize_coefficients(raw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def coefficients_to_pairs(coefficients: Iterable[complex]) -> list[list[float]]:
    return [[abs(c), float(np.angle(c) / math.pi)] for c in coefficients]


@dataclass(frozen=True)
class ExperimentConfig:
    photon: ChirpedPulseSpec
    pump: ChirpedPulseSpec
    bin_spacing: float
    window_width: float = 0.11 * NM
    resolution: float = 0.03 * NM
    noise: NoiseModel = field(default_factory=NoiseModel)
    beta_offset: float = 0.0
    chsh_phases: tuple[float, float, float, float] = (0.0, math.pi / 2, -math.pi / 4, math.pi / 4)
    zeta_offset: float = 0.0
    output_dir: Path = Path("out")

    def with_bin_spacing(self, tau: float) -> "ExperimentConfig":
        return replace(self, bin_spacing=tau,
                       photon=replace(self.photon, bin_spacing=tau),
                       pump=replace(self.pump, bin_spacing=tau))

    def with_noise(self, **changes: Any) -> "ExperimentConfig":
        return replace(self, noise=replace(self.noise, **changes))

    def as_dict(self) -> dict:
        def pulse(p: ChirpedPulseSpec) -> dict:
            return {
                "center_angular_frequency": p.center,
                "sigma": p.sigma,
                "chirp_fs2": p.chirp / FS2,
                "delay_ps": p.delay / PS,
                "coefficients": coefficients_to_pairs(p.coefficients),
            }
        return {
            "photon": pulse(self.photon),
            "pump": pulse(self.pump),
            "bin_spacing_ps": self.bin_spacing / PS,
            "window_nm": self.window_width / NM,
            "resolution_nm": self.resolution / NM,
            "noise": {
                "visibility": self.noise.fringe_visibility,
                "counts_per_setting": self.noise.counts_per_setting_mean,
                "seed": self.noise.seed,
            },
            "beta_offset_over_pi": self.beta_offset / math.pi,
            "chsh_phases_over_pi": [x / math.pi for x in self.chsh_phases],
            "zeta_offset_over_pi": self.zeta_offset / math.pi,
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _get(table: dict, key: str, section: str, default: Any = None, required: bool = False):
    if key not in table:
        if required:
            raise ConfigError(f"missing key '{key}' in [{section}]")
        return default
    return table[key]


def _number(table: dict, key: str, section: str, default: float | None = None) -> float:
    value = _get(table, key, section, default, required=default is None)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{section}] {key} must be a number, got {value!r}")
    return float(value)


def _pulse(table: dict, section: str, tau: float) -> ChirpedPulseSpec:
    pairs = _get(table, "coefficients", section, [[1.0, 0.0], [1.0, 0.0]])
    try:
        return ChirpedPulseSpec.from_wavelength(
            _number(table, "center_wavelength_nm", section) * NM,
            _number(table, "fwhm_nm", section) * NM,
            _number(table, "chirp_fs2", section, 0.0) * FS2,
            delay=_number(table, "delay_ps", section, 0.0) * PS,
            bin_spacing=tau,
            coefficients=coefficients_from_pairs(pairs),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def config_from_mapping(data: dict) -> ExperimentConfig:
    for section in ("photon", "pump"):
        if not isinstance(data.get(section), dict):
            raise ConfigError(f"missing [{section}] section")
    bins = data.get("bins", {})
    tau = _number(bins, "spacing_ps", "bins", 0.0) * PS
    mono = data.get("monochromator", {})
    noise = data.get("noise", {})
    meas = data.get("measurement", {})
    chsh = data.get("chsh", {})
    out = data.get("output", {})
    phases = _get(chsh, "phases_over_pi", "chsh", [0.0, 0.5, -0.25, 0.25])
    if not isinstance(phases, list) or len(phases) != 4:
        raise ConfigError("[chsh] phases_over_pi must list four numbers")
    try:
        noise_model = NoiseModel(
            fringe_visibility=_number(noise, "visibility", "noise", 1.0),
            counts_per_setting_mean=_number(noise, "counts_per_setting", "noise", 500.0),
            seed=int(_number(noise, "seed", "noise", 0)),
        )
        window = _number(mono, "window_nm", "monochromator", 0.11) * NM
        if not window > 0:
            raise ValueError("[monochromator] window_nm must be positive")
        return ExperimentConfig(
            photon=_pulse(data["photon"], "photon", tau),
            pump=_pulse(data["pump"], "pump", tau),
            bin_spacing=tau,
            window_width=window,
            resolution=_number(mono, "resolution_nm", "monochromator", 0.03) * NM,
            noise=noise_model,
            beta_offset=_number(meas, "beta_offset_over_pi", "measurement", 0.0) * math.pi,
            chsh_phases=tuple(float(x) * math.pi for x in phases),
            zeta_offset=_number(chsh, "zeta_offset_over_pi", "chsh", 0.0) * math.pi,
            output_dir=Path(str(_get(out, "directory", "output", "out"))),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def default_config_text() -> str:
    return resources.files("timebin_sfg").joinpath("data/default.toml").read_text()


def load_config(path: str | Path | None = None) -> ExperimentConfig:
    """Parse a TOML experiment file; ``None`` loads the packaged default."""
    if path is None:
        text, origin = default_config_text(), "<default>"
    else:
        try:
            text, origin = Path(path).read_text(), str(path)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    return config_from_mapping(data)


def load_projector(path: str | Path) -> ProjectorSpec:
    """Projector file: TOML with ``dimension``, ``bin_spacing_ps`` and ``coefficients`` pairs."""
    try:
        data = tomllib.loads(Path(path).read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read projector {path}: {exc}") from None
    coeffs = coefficients_from_pairs(_get(data, "coefficients", "projector", required=True))
    n = int(_number(data, "dimension", "projector", float(len(coeffs))))
    if n != len(coeffs):
        raise ConfigError(f"projector declares dimension {n} but lists {len(coeffs)} coefficients")
    return ProjectorSpec(coeffs, _number(data, "bin_spacing_ps", "projector") * PS)


# ---------------------------------------------------------------------------
# counts tables
# ---------------------------------------------------------------------------

COUNTS_HEADER = ("setting_index", "idler_label", "signal_label", "counts")


@dataclass(frozen=True)
class CountsTable:
    labels: tuple[tuple[str, str], ...]
    counts: np.ndarray


def read_counts(path: str | Path) -> CountsTable:
    """Read a tomography counts CSV, reporting the offending line on any error."""
    from .tomography import IDLER_TOMO, SIGNAL_TOMO

    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read counts file {path}: {exc}") from None
    labels, counts, seen = [], [], set()
    with handle:
        rows = csv.reader(row for row in handle if not row.lstrip().startswith("#"))
        header = next(rows, None)
        if header is None or tuple(h.strip() for h in header) != COUNTS_HEADER:
            raise ConfigError(f"{path}: header must be {','.join(COUNTS_HEADER)}")
        for lineno, row in enumerate(rows, start=2):
            if not row or all(not x.strip() for x in row):
                continue
            if len(row) != 4:
                raise ConfigError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            index, idler, signal, value = (x.strip() for x in row)
            try:
                int(index)
                n = float(value)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: setting_index and counts must be numeric") from None
            if idler not in IDLER_TOMO or signal not in SIGNAL_TOMO:
                raise ConfigError(f"{path}:{lineno}: unknown analyser pair ({idler}, {signal})")
            if not math.isfinite(n) or n < 0:
                raise ConfigError(f"{path}:{lineno}: counts must be finite and non-negative")
            if (idler, signal) in seen:
                raise ConfigError(f"{path}:{lineno}: duplicate setting ({idler}, {signal})")
            seen.add((idler, signal))
            labels.append((idler, signal))
            counts.append(n)
    if not counts:
        raise ConfigError(f"{path}: no counts rows")
    if not any(n > 0 for n in counts):
        raise ConfigError(f"{path}: all counts are zero")
    return CountsTable(tuple(labels), np.array(counts))


def write_counts(path: str | Path, labels: Sequence[tuple[str, str]], counts: Sequence[float]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COUNTS_HEADER)
        for i, ((idler, signal), n) in enumerate(zip(labels, counts)):
            w.writerow([i, idler, signal, _fmt_count(n)])


def _fmt_count(n: float) -> str:
    return str(int(n)) if float(n).is_integer() else f"{float(n):.6f}"
