"""Two-qubit maximum-likelihood state tomography with the R rho R iteration.

The measurement set is the 6 x 6 product of idler polarization analysers
{H,V,D,A,R,L} with signal time-bin analysers {e, l, (e + e^{i phi} l)/sqrt2,
phi in {-pi/2, 0, pi/2, pi}}.  The 36 projectors fall into nine groups of four
(one idler basis pair times one signal basis pair), each resolving the
identity.  Observed counts are turned into frequencies per group so that
settings with different exposure times are weighted evenly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .entangle import PHI_TILDE_PLUS, polarization_vector

log = logging.getLogger(__name__)

PROBABILITY_FLOOR = 1e-12
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000

IDLER_TOMO = ("H", "V", "D", "A", "R", "L")
SIGNAL_TOMO = ("e", "l", "+", "-", "+i", "-i")
_IDLER_GROUP = {"H": 0, "V": 0, "D": 1, "A": 1, "R": 2, "L": 2}
_SIGNAL_GROUP = {"e": 0, "l": 0, "+": 1, "-": 1, "+i": 2, "-i": 2}


def signal_vector(label: str, phase_offset: float = 0.0) -> np.ndarray:
    """Time-bin analyser ket: 'e', 'l', or (e + e^{i phi} l)/sqrt2 for '+', '-', '+i', '-i'.

    ``phase_offset`` shifts phi for the superposition analysers, modelling an
    uncalibrated pump-phase offset.
    """
    phases = {"+": 0.0, "-": math.pi, "+i": math.pi / 2, "-i": -math.pi / 2}
    if label == "e":
        return np.array([1, 0], dtype=complex)
    if label == "l":
        return np.array([0, 1], dtype=complex)
    if label not in phases:
        raise ValueError(f"unknown time-bin analyser {label!r}; expected one of {SIGNAL_TOMO}")
    return np.array([1, np.exp(1j * (phases[label] + phase_offset))], dtype=complex) / math.sqrt(2.0)


@dataclass(frozen=True)
class TomographySet:
    """Labelled POVM elements with the group structure used to form frequencies."""

    labels: tuple[tuple[str, str], ...]
    elements: np.ndarray = field(repr=False)
    groups: tuple[int, ...]

    def __post_init__(self):
        el = np.array(self.elements, dtype=complex)
        if el.ndim != 3 or el.shape[1] != el.shape[2] or len(el) != len(self.labels):
            raise ValueError("elements must be a stack of square matrices, one per label")
        if len(self.groups) != len(el):
            raise ValueError("one group index per element is required")
        for k, e in enumerate(el):
            if np.max(np.abs(e - e.conj().T)) > 1e-12 or np.linalg.eigvalsh(e).min() < -1e-10:
                raise ValueError(f"element {self.labels[k]} is not positive semidefinite")
        el.setflags(write=False)
        object.__setattr__(self, "elements", el)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dimension(self) -> int:
        return self.elements.shape[1]

    def gram_rank(self, tol: float = 1e-10) -> int:
        """Rank of the design matrix mapping density matrices to probabilities."""
        design = self.elements.reshape(len(self), -1)
        return int(np.linalg.matrix_rank(design, tol=tol))

    @property
    def complete(self) -> bool:
        return self.gram_rank() == self.dimension**2

    def probabilities(self, rho: np.ndarray) -> np.ndarray:
        return np.real(np.einsum("kij,ji->k", self.elements, rho))

    def transformed(self, unitary: np.ndarray) -> "TomographySet":
        u = np.asarray(unitary)
        return TomographySet(self.labels, u @ self.elements @ u.conj().T, self.groups)


def set_from_labels(labels: Sequence[tuple[str, str]], signal_phase_offset: float = 0.0) -> TomographySet:
    """Product projectors for (idler, signal) analyser label pairs, in the given order."""
    elements, groups = [], []
    for il, sl in labels:
        ket = np.kron(polarization_vector(il), signal_vector(sl, signal_phase_offset))
        elements.append(np.outer(ket, ket.conj()))
        groups.append(3 * _IDLER_GROUP[il] + _SIGNAL_GROUP[sl])
    return TomographySet(tuple((il, sl) for il, sl in labels), np.array(elements), tuple(groups))


def build_36_set(idler_labels: Sequence[str] = IDLER_TOMO, signal_labels: Sequence[str] = SIGNAL_TOMO,
                 signal_phase_offset: float = 0.0) -> TomographySet:
    """All idler x signal analyser products, idler-major."""
    return set_from_labels([(il, sl) for il in idler_labels for sl in signal_labels], signal_phase_offset)


def frequencies(counts: Sequence[float], groups: Sequence[int]) -> np.ndarray:
    """Counts divided by their group total and by the number of groups.

    Groups with no counts at all carry no information and get zero weight;
    the remaining frequencies sum to one.
    """
    n = np.asarray(counts, dtype=float)
    g = np.asarray(groups)
    if np.any(n < 0):
        raise ValueError("counts must be non-negative")
    if not np.any(n > 0):
        raise ValueError("at least one count must be positive")
    f = np.zeros_like(n)
    labels = [lab for lab in np.unique(g) if n[g == lab].sum() > 0]
    for lab in labels:
        sel = g == lab
        f[sel] = n[sel] / n[sel].sum()
    return f / len(labels)


@dataclass(frozen=True)
class ReconstructionResult:
    rho: np.ndarray = field(repr=False)
    log_likelihood: tuple[float, ...] = field(repr=False)
    iterations: int
    converged: bool
    clamped: int = 0


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a - b))))


def _log_likelihood(f: np.ndarray, p: np.ndarray) -> float:
    mask = f > 0
    return float(np.sum(f[mask] * np.log(p[mask])))


def mle_reconstruct(counts: Sequence[float], tset: TomographySet, max_iter: int = DEFAULT_MAX_ITER,
                    tol: float = DEFAULT_TOL, *, check_monotone: bool = False,
                    record_likelihood: bool = True) -> ReconstructionResult:
    """Iterate rho <- R rho R / Tr(R rho R) from the maximally mixed state.

    R = sum_i (f_i / p_i) Pi_i.  If a full step ever lowers the likelihood the
    step is diluted, R -> (1 + eps R)/(1 + eps) with eps halved until it no
    longer does, so the recorded log-likelihood is non-decreasing.
    Iteration stops once the trace distance between successive estimates is
    below ``tol``; hitting ``max_iter`` returns ``converged=False``.
    """
    if len(counts) != len(tset):
        raise ValueError(f"{len(counts)} counts given for {len(tset)} settings")
    f = frequencies(counts, tset.groups)
    dim = tset.dimension
    elements = tset.elements
    flat = elements.reshape(len(tset), -1)
    eye = np.eye(dim)
    rho = eye / dim
    clamped = 0

    def probs(r):
        # Tr(rho Pi_k) = sum_ij Pi_k[i,j] rho[j,i]
        return np.real(flat @ r.T.reshape(-1))

    p = probs(rho)
    low = p < PROBABILITY_FLOOR
    clamped += int(low.sum())
    p = np.maximum(p, PROBABILITY_FLOOR)
    ll = _log_likelihood(f, p)
    trace = [ll] if record_likelihood else []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        r_op = np.tensordot(f / p, elements, axes=1)
        new = r_op @ rho @ r_op
        new /= np.trace(new).real
        new_p = probs(new)
        new_ll = _log_likelihood(f, np.maximum(new_p, PROBABILITY_FLOOR))
        eps = 1.0
        while new_ll < ll - 1e-13 * abs(ll) and eps > 1e-8:
            step = (eye + eps * r_op) / (1.0 + eps)
            new = step @ rho @ step
            new /= np.trace(new).real
            new_p = probs(new)
            new_ll = _log_likelihood(f, np.maximum(new_p, PROBABILITY_FLOOR))
            eps /= 2.0
        new = 0.5 * (new + new.conj().T)
        if check_monotone and new_ll < ll - 1e-12 * abs(ll):
            raise AssertionError(f"log-likelihood decreased at iteration {it}: {ll!r} -> {new_ll!r}")
        low = new_p < PROBABILITY_FLOOR
        clamped += int(low.sum())
        step_size = trace_distance(new, rho)
        rho, p, ll = new, np.maximum(new_p, PROBABILITY_FLOOR), new_ll
        if record_likelihood:
            trace.append(ll)
        if step_size < tol:
            converged = True
            break
    if not converged:
        log.warning("R rho R iteration did not converge in %d iterations", max_iter)
    return ReconstructionResult(rho, tuple(trace), it, converged, clamped)


def expected_counts(rho: np.ndarray, tset: TomographySet, counts_per_setting: float) -> np.ndarray:
    return tset.probabilities(rho) * counts_per_setting


# ---------------------------------------------------------------------------
# figures of merit
# ---------------------------------------------------------------------------

def _check_density(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -1e-10:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.conj().T


def fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """<chi|rho|chi> for a ket target, Uhlmann (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 otherwise.

    Either argument may be a ket.
    """
    rho = np.asarray(rho, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if rho.ndim == 1 and target.ndim == 1:
        return float(abs(np.vdot(target, rho)) ** 2)
    if rho.ndim == 1:
        rho, target = target, rho
    rho = _check_density(rho)
    if target.ndim == 1:
        return float(np.real(np.vdot(target, rho @ target)))
    target = _check_density(target)
    root = _psd_sqrt(rho)
    inner = np.linalg.eigvalsh(root @ target @ root)
    return float(np.sum(np.sqrt(np.clip(inner, 0.0, None))) ** 2)


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho, dtype=complex)
    return float(np.real(np.trace(rho @ rho)))


@dataclass(frozen=True)
class ErrorEstimate:
    metric: str
    mean: float
    std: float
    n_resamples: int
    excluded: int = 0

    def __post_init__(self):
        if self.n_resamples < 2:
            raise ValueError("an error estimate needs at least two resamples")


METRICS: dict[str, Callable[[np.ndarray], float]] = {
    "purity": purity,
    "fidelity": lambda rho: fidelity(rho, PHI_TILDE_PLUS),
}


def monte_carlo_errors(counts: Sequence[float], tset: TomographySet,
                       metric: str | Callable[[np.ndarray], float] = "fidelity",
                       n_resamples: int = 400, seed: int = 0, *,
                       max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL) -> ErrorEstimate:
    """Poisson-resample every count, reconstruct, and summarise ``metric``.

    Each resample draws from its own stream split off ``seed``.  Resamples
    whose reconstruction does not converge are dropped and counted in
    ``excluded``.
    """
    if n_resamples < 2:
        raise ValueError("n_resamples must be at least 2")
    if isinstance(metric, str):
        name, fn = metric, METRICS[metric]
    else:
        name, fn = getattr(metric, "__name__", "metric"), metric
    observed = np.asarray(counts, dtype=float)
    seeds = np.random.SeedSequence(seed).spawn(n_resamples)
    values, excluded = [], 0
    for s in seeds:
        resampled = np.random.default_rng(s).poisson(observed)
        if not np.any(resampled > 0):
            excluded += 1
            continue
        result = mle_reconstruct(resampled, tset, max_iter, tol, record_likelihood=False)
        if not result.converged:
            excluded += 1
            continue
        values.append(fn(result.rho))
    if len(values) < 2:
        raise RuntimeError(f"only {len(values)} of {n_resamples} resamples reconstructed")
    arr = np.array(values)
    return ErrorEstimate(name, float(arr.mean()), float(arr.std(ddof=1)), n_resamples, excluded)
