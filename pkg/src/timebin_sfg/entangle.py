"""Polarization / time-bin entangled pairs: coincidences, singles, fringes, CHSH.

Two-qubit operators act on idler polarization (x) signal time bin, with basis
order |He>, |Hl>, |Ve>, |Vl>.  Idler analysers are (|H> + e^{i gamma}|V>)/sqrt2
or H / V; signal analysers are time-bin :class:`ProjectorSpec` objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .measurement import ProjectorSpec, time_bin_projector

SQRT_HALF = 1.0 / math.sqrt(2.0)

IDLER_PHASES = {"D": 0.0, "L": math.pi / 2, "A": math.pi, "R": 3 * math.pi / 2}
IDLER_LABELS = ("H", "V", "D", "A", "R", "L")

# measured angles; the birefringence offset on the time-bin side is unreported
EXPERIMENT_CHSH_PHASES = (0.0, math.pi / 4, 0.066 * math.pi, 0.316 * math.pi)

PHI_TILDE_PLUS = np.array([SQRT_HALF, 0, 0, SQRT_HALF], dtype=complex)
CLASSICAL_MIXTURE = np.diag([0.5, 0, 0, 0.5]).astype(complex)


def polarization_vector(basis: str | float) -> np.ndarray:
    """Analyser ket for a basis label in {H,V,D,A,R,L} or an equatorial phase gamma."""
    if isinstance(basis, str):
        if basis == "H":
            return np.array([1, 0], dtype=complex)
        if basis == "V":
            return np.array([0, 1], dtype=complex)
        if basis not in IDLER_PHASES:
            raise ValueError(f"unknown polarization basis {basis!r}; expected one of {IDLER_LABELS}")
        basis = IDLER_PHASES[basis]
    return SQRT_HALF * np.array([1, np.exp(1j * basis)], dtype=complex)


def _validate_density(rho: np.ndarray, dim: int = 4) -> np.ndarray:
    rho = np.array(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise ValueError(f"density matrix must be {dim}x{dim}, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-12:
        raise ValueError(f"density matrix trace is {np.trace(rho).real!r}, not 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


@dataclass(frozen=True)
class TwoQubitState:
    rho: np.ndarray = field(repr=False)
    labels: tuple[str, ...] = ("He", "Hl", "Ve", "Vl")

    def __post_init__(self):
        rho = _validate_density(self.rho)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def pure(cls, ket: Sequence[complex]) -> "TwoQubitState":
        v = np.asarray(ket, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    def reduced(self, side: str) -> np.ndarray:
        """Partial trace keeping ``side`` ('idler' or 'signal')."""
        r = self.rho.reshape(2, 2, 2, 2)
        if side == "idler":
            return np.einsum("ajbj->ab", r)
        if side == "signal":
            return np.einsum("jajb->ab", r)
        raise ValueError(f"side must be 'idler' or 'signal', got {side!r}")


@dataclass(frozen=True)
class NoiseModel:
    fringe_visibility: float = 1.0
    counts_per_setting_mean: float = 500.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fringe_visibility <= 1.0:
            raise ValueError(f"visibility must lie in [0, 1], got {self.fringe_visibility!r}")
        if not self.counts_per_setting_mean > 0:
            raise ValueError("mean counts per setting must be positive")


@dataclass(frozen=True)
class MeasurementSetting:
    """Product analyser: idler polarization ket times signal time-bin projector."""

    idler: tuple[complex, complex]
    signal: ProjectorSpec
    idler_label: str = ""

    @classmethod
    def from_basis(cls, basis: str | float, signal: ProjectorSpec) -> "MeasurementSetting":
        label = basis if isinstance(basis, str) else f"gamma={basis:.6g}"
        return cls(tuple(complex(x) for x in polarization_vector(basis)), signal, label)

    @property
    def idler_vector(self) -> np.ndarray:
        return np.array(self.idler, dtype=complex)

    @property
    def ket(self) -> np.ndarray:
        if self.signal.dimension != 2:
            raise ValueError("two-qubit settings need a qubit time-bin projector")
        return np.kron(self.idler_vector, self.signal.vector)


def make_phi_plus(visibility: float) -> TwoQubitState:
    """Phase-damped |Phi~+>: V |Phi~+><Phi~+| + (1 - V)(|He><He| + |Vl><Vl|)/2."""
    if not 0.0 <= visibility <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {visibility!r}")
    pure = np.outer(PHI_TILDE_PLUS, PHI_TILDE_PLUS.conj())
    return TwoQubitState(visibility * pure + (1.0 - visibility) * CLASSICAL_MIXTURE)


def _expect(rho: np.ndarray, ket: np.ndarray) -> float:
    return float(np.real(np.vdot(ket, rho @ ket)))


def coincidence_probability(state: TwoQubitState, setting: MeasurementSetting) -> float:
    return _expect(state.rho, setting.ket)


def singles_probability(state: TwoQubitState, setting: MeasurementSetting, side: str = "signal") -> float:
    """Born-rule probability for one analyser after tracing out the other photon."""
    ket = setting.idler_vector if side == "idler" else setting.signal.vector
    return _expect(state.reduced(side), ket)


# ---------------------------------------------------------------------------
# fringes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FringeFit:
    offset: float
    amplitude: float
    phase: float
    visibility: float
    degenerate: bool = False
    visibility_error: float = float("nan")


@dataclass(frozen=True)
class FringeScan:
    gammas: np.ndarray
    betas: np.ndarray
    coincidences: np.ndarray
    singles: np.ndarray
    fits: tuple[FringeFit, ...]

    @property
    def visibilities(self) -> np.ndarray:
        return np.array([f.visibility for f in self.fits])


def fit_fringe(betas: Sequence[float], values: Sequence[float],
               variances: Sequence[float] | None = None) -> FringeFit:
    """Least-squares fit of offset + amplitude cos(beta - phase).

    Flat or non-positive data cannot define a visibility; those return 0
    with ``degenerate`` set.  Given per-point ``variances`` (the counts
    themselves for Poisson data) the visibility error is propagated through
    the linear fit.
    """
    b = np.asarray(betas, dtype=float)
    y = np.asarray(values, dtype=float)
    design = np.column_stack([np.ones_like(b), np.cos(b), np.sin(b)])
    (offset, ca, sa), *_ = np.linalg.lstsq(design, y, rcond=None)
    amplitude = math.hypot(ca, sa)
    phase = math.atan2(sa, ca)
    scale = max(abs(offset), np.max(np.abs(y)) if y.size else 0.0)
    if offset <= 0 or amplitude <= 1e-12 * max(scale, 1e-300):
        return FringeFit(float(offset), float(amplitude), phase, 0.0, degenerate=True)
    visibility = amplitude / offset
    error = float("nan")
    if variances is not None:
        pinv = np.linalg.pinv(design)
        cov = pinv @ np.diag(np.asarray(variances, dtype=float)) @ pinv.T
        grad = np.array([-visibility / offset, ca / (amplitude * offset), sa / (amplitude * offset)])
        error = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    return FringeFit(float(offset), float(amplitude), phase, float(visibility), visibility_error=error)


def _check_period(betas: np.ndarray) -> None:
    b = np.sort(betas)
    step = np.mean(np.diff(b)) if len(b) > 1 else 0.0
    if len(b) < 3 or (b[-1] - b[0]) + step < 2 * math.pi * (1 - 1e-9):
        raise ValueError("beta grid must cover a full 2 pi period with at least three points")


def fringe_scan(state: TwoQubitState, gammas: Sequence[float | str], betas: Sequence[float],
                bin_spacing: float = 0.0) -> FringeScan:
    """Coincidence and signal-singles probabilities over an idler x beta grid, with fits."""
    betas = np.asarray(betas, dtype=float)
    _check_period(betas)
    coinc = np.empty((len(gammas), len(betas)))
    singles = np.empty_like(coinc)
    for i, g in enumerate(gammas):
        for k, b in enumerate(betas):
            setting = MeasurementSetting.from_basis(g, time_bin_projector(b, bin_spacing))
            coinc[i, k] = coincidence_probability(state, setting)
            singles[i, k] = singles_probability(state, setting, "signal")
    fits = tuple(fit_fringe(betas, row) for row in coinc)
    gamma_values = np.array([IDLER_PHASES[g] if isinstance(g, str) else g for g in gammas], dtype=float)
    return FringeScan(gamma_values, betas, coinc, singles, fits)


# ---------------------------------------------------------------------------
# CHSH
# ---------------------------------------------------------------------------

def optimal_chsh_phases() -> tuple[float, float, float, float]:
    """(xi_a, xi_a', zeta_b, zeta_b') saturating S = 2 sqrt 2 when E = cos(xi + zeta)."""
    return (0.0, math.pi / 2, -math.pi / 4, math.pi / 4)


def chsh_outcome_probabilities(state: TwoQubitState, xi: float, zeta: float,
                               bin_spacing: float = 0.0) -> np.ndarray:
    """Joint probabilities for outcomes (++, +-, -+, --).

    The '+' idler outcome is (|H> + e^{i xi}|V>)/sqrt2 and '-' its orthogonal
    partner; likewise for the time-bin side with zeta.
    """
    out = np.empty(4)
    for n, (si, ss) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        setting = MeasurementSetting.from_basis(xi + si * math.pi,
                                                time_bin_projector(zeta + ss * math.pi, bin_spacing))
        out[n] = coincidence_probability(state, setting)
    return out


def correlation_from_outcomes(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    total = p.sum()
    if total <= 0:
        raise ValueError("no events to form a correlation")
    return float((p[0] - p[1] - p[2] + p[3]) / total)


def chsh_settings(xi_a: float, xi_a2: float, zeta_b: float, zeta_b2: float):
    return ((xi_a, zeta_b), (xi_a, zeta_b2), (xi_a2, zeta_b), (xi_a2, zeta_b2))


CHSH_SIGNS = np.array([1.0, 1.0, 1.0, -1.0])


def chsh_probability_table(state: TwoQubitState, xi_a: float, xi_a2: float,
                           zeta_b: float, zeta_b2: float) -> np.ndarray:
    """4 x 4 table: rows are the settings (a,b), (a,b'), (a',b), (a',b'); columns outcomes."""
    return np.array([chsh_outcome_probabilities(state, x, z)
                     for x, z in chsh_settings(xi_a, xi_a2, zeta_b, zeta_b2)])


def chsh_from_table(table: np.ndarray) -> float:
    return float(sum(s * correlation_from_outcomes(row) for s, row in zip(CHSH_SIGNS, table)))


def chsh_value(state: TwoQubitState, xi_a: float, xi_a2: float, zeta_b: float, zeta_b2: float) -> float:
    """S = E(a,b) + E(a,b') + E(a',b) - E(a',b')."""
    return chsh_from_table(chsh_probability_table(state, xi_a, xi_a2, zeta_b, zeta_b2))


# ---------------------------------------------------------------------------
# counting noise
# ---------------------------------------------------------------------------

def spawn_generators(seed: int, n: int) -> list[np.random.Generator]:
    """Independent PCG64 streams split from one master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def sample_counts(probabilities, noise: NoiseModel,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Poisson counts with mean probability x ``counts_per_setting_mean``.

    Without an explicit ``rng`` a fresh PCG64 generator seeded from
    ``noise.seed`` is used, so equal seeds give identical tables.
    """
    p = np.asarray(probabilities, dtype=float)
    if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
        raise ValueError("probabilities must lie in [0, 1]")
    if rng is None:
        rng = np.random.default_rng(noise.seed)
    return rng.poisson(np.clip(p, 0.0, 1.0) * noise.counts_per_setting_mean)
