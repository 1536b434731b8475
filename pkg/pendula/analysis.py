"""
Lyapunov spectra, synchrony eigenvalues, critical couplings and their interval bounds,
centre-of-mass diagnostics and N = 2 relative coordinates.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from pendula.config import CHAOS_THRESHOLD, CONVERGENCE_DRIFT, LYAPUNOV_T, REORTH_PERIOD
from pendula.dynamics import CoupledSystem, SystemState
from pendula.errors import DomainError, NoOscillationError, RenormalizationError
from pendula.graph_core import edge_connectivity, is_connected, spectrum
from pendula.integrator import IntegratorConfig, Trajectory, integrate_with_tangent

logger = logging.getLogger(__name__)

MIN_FREQUENCY_SAMPLES = 1024


# ---------------------------------------------------------------------------
# Lyapunov spectrum
# ---------------------------------------------------------------------------

class _CompensatedSum:
    """Kahan summation over a vector of running totals."""

    def __init__(self, size: int):
        self.total = np.zeros(size)
        self._carry = np.zeros(size)

    def add(self, values: np.ndarray) -> None:
        y = values - self._carry
        t = self.total + y
        self._carry = (t - self.total) - y
        self.total = t


def modified_gram_schmidt(frame: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Orthonormalise the columns of frame in order.

    Returns:
        (orthonormal frame, column norms before normalisation)

    Raises:
        RenormalizationError: a column collapsed (norm < 1e-300)
    """
    q = np.array(frame, dtype=float, copy=True)
    norms = np.empty(q.shape[1])
    for k in range(q.shape[1]):
        for j in range(k):
            q[:, k] -= (q[:, j] @ q[:, k]) * q[:, j]
        norm = float(np.linalg.norm(q[:, k]))
        if not norm >= 1e-300:
            raise RenormalizationError(f"tangent vector {k} degenerated (norm {norm:.3e})")
        q[:, k] /= norm
        norms[k] = norm
    return q, norms


@dataclass
class LyapunovResult:
    """Exponents sorted descending plus running estimates at every reorthonormalisation."""

    exponents: np.ndarray
    history_times: np.ndarray
    history: np.ndarray
    T_total: float
    reorth_period: float
    energy_drift: float = 0.0
    warnings: List[str] = field(default_factory=list)

    @property
    def max_exponent(self) -> float:
        return float(self.exponents[0])

    @property
    def exponent_sum(self) -> float:
        return float(np.sum(self.exponents))

    @property
    def pairing_error(self) -> float:
        """max_k |lambda_k + lambda_(2N+1-k)|."""
        return float(np.max(np.abs(self.exponents + self.exponents[::-1])))

    @property
    def verdict(self) -> str:
        return 'CHAOTIC' if self.max_exponent > CHAOS_THRESHOLD else 'REGULAR'

    @property
    def converged(self) -> bool:
        return not self.warnings


def _convergence_warning(times: np.ndarray, history: np.ndarray) -> Optional[str]:
    """Compare the max exponent at T against its estimate at T/10."""
    final = float(np.max(history[-1]))
    k = int(np.searchsorted(times, times[-1] / 10.0))
    k = min(max(k, 0), len(times) - 1)
    earlier = float(np.max(history[k]))
    delta = abs(final - earlier)
    if delta > CONVERGENCE_DRIFT * abs(final) and delta > CHAOS_THRESHOLD:
        return (f"Lyapunov estimate not converged: max exponent moved from {earlier:.3e} "
                f"(t = {times[k]:.4g}) to {final:.3e} (t = {times[-1]:.4g}); increase T")
    return None


def lyapunov_spectrum(sys: CoupledSystem, s0: SystemState, T: float = LYAPUNOV_T,
                      reorth_period: float = REORTH_PERIOD,
                      cfg: Optional[IntegratorConfig] = None) -> LyapunovResult:
    """
    Full Lyapunov spectrum by the tangent-flow QR (Benettin) method.

    The tangent frame starts at the identity, is orthonormalised by modified
    Gram-Schmidt every reorth_period, and the log-norms are accumulated with
    compensated summation.

    Args:
        sys: Coupled system
        s0: Initial state
        T: Total time, at least 100 * reorth_period
        reorth_period: Time between reorthonormalisations
        cfg: Integrator settings (the output sampling is set to reorth_period)

    Returns:
        LyapunovResult with 2N exponents sorted descending
    """
    if reorth_period <= 0 or not math.isfinite(T) or T < 100.0 * reorth_period:
        raise DomainError(f"Lyapunov run needs T >= 100 * reorth_period (T = {T}, period = {reorth_period})")
    cfg = (cfg or IntegratorConfig()).with_sampling(reorth_period)
    dim = 2 * sys.n
    sums = _CompensatedSum(dim)
    times: List[float] = []
    estimates: List[np.ndarray] = []

    def renormalize(t, frame):
        q, norms = modified_gram_schmidt(frame)
        sums.add(np.log(norms))
        elapsed = t - s0.t
        times.append(elapsed)
        estimates.append(sums.total / elapsed)
        return q

    trajectory, _ = integrate_with_tangent(sys, s0, T, cfg, checkpoint_interval=reorth_period,
                                           on_checkpoint=renormalize)
    history = np.array(estimates)
    history_times = np.array(times)
    exponents = np.sort(sums.total / T)[::-1]
    warnings = []
    message = _convergence_warning(history_times, history)
    if message:
        logger.warning(message)
        warnings.append(message)
    return LyapunovResult(exponents=exponents, history_times=history_times, history=history,
                          T_total=float(T), reorth_period=float(reorth_period),
                          energy_drift=trajectory.energy_drift, warnings=warnings)


# ---------------------------------------------------------------------------
# Linear analysis around synchrony and the origin
# ---------------------------------------------------------------------------

def synchrony_eigenvalues(sys: CoupledSystem, q_synch: float) -> np.ndarray:
    """
    Eigenvalues of the linearisation at a synchronous state (q_synch, 0).

    One pair +-sqrt(-(1 + 2 kappa c01 lambda)(cos q + 2 kappa c10 lambda)) per
    Laplacian eigenvalue lambda; each value is purely real or purely imaginary.
    """
    pot = sys.potential
    values = []
    for lam in spectrum(sys.graph).eigenvalues:
        lam = max(float(lam), 0.0)
        radicand = -(1.0 + 2.0 * sys.kappa * pot.c01 * lam) * (math.cos(q_synch) + 2.0 * sys.kappa * pot.c10 * lam)
        root = complex(math.sqrt(radicand), 0.0) if radicand >= 0 else complex(0.0, math.sqrt(-radicand))
        values.extend([root, -root])
    return np.array(values, dtype=complex)


@dataclass(frozen=True)
class CriticalCoupling:
    """
    Coupling where the origin turns from elliptic to mixed along one Laplacian eigenspace.

    tangent holds the centre-manifold directions (v, v)/sqrt(2) as columns.
    """

    kappa: float
    eigenvalue: float
    branch: str
    coefficient: float
    multiplicity: int
    tangent: np.ndarray = field(repr=False, compare=False)


def _branches(sys: CoupledSystem) -> List[Tuple[str, float]]:
    return [(name, c) for name, c in (('c10', sys.potential.c10), ('c01', sys.potential.c01)) if c < 0]


def critical_couplings(sys: CoupledSystem) -> List[CriticalCoupling]:
    """
    All kappa = -1/(2 c lambda) over non-zero Laplacian eigenvalues and negative c in {c10, c01}.

    Equal eigenvalues are merged with multiplicity. Branches with c >= 0 give nothing.
    """
    found = []
    clusters = spectrum(sys.graph).clusters()
    for branch, c in _branches(sys):
        for lam, multiplicity, vectors in clusters:
            if lam <= 1e-9:
                continue
            tangent = np.vstack([vectors, vectors]) / math.sqrt(2.0)
            found.append(CriticalCoupling(kappa=-1.0 / (2.0 * c * lam), eigenvalue=lam, branch=branch,
                                          coefficient=c, multiplicity=multiplicity, tangent=tangent))
    return sorted(found, key=lambda cc: (cc.kappa, cc.branch))


@dataclass(frozen=True)
class BifurcationInterval:
    """
    Coupling bounds from (N, edge-connectivity) and the actual spectral range, per branch.

    upper uses lambda_2 >= 2 kappa' / N, which fails for long paths (P5 already has
    lambda_2 < 2/5); guaranteed_upper uses lambda_2 >= 2 kappa' (1 - cos(pi/N)), which always holds.
    """

    branch: str
    coefficient: float
    lower: float
    upper: float
    guaranteed_upper: float
    spectral_lower: float
    spectral_upper: float
    edge_connectivity: int

    @property
    def exceeds_stated(self) -> bool:
        """True when the largest critical coupling lies above the N / (2 kappa') end."""
        return self.spectral_upper > self.upper * (1.0 + 1e-12)

    def contains(self, kappa: float, tol: float = 1e-12) -> bool:
        return self.lower - tol <= kappa <= max(self.upper, self.guaranteed_upper) + tol


def bifurcation_interval(sys: CoupledSystem) -> List[BifurcationInterval]:
    """
    -1/(2c) * [1/N, N/(2 kappa')] for each negative c in {c10, c01}, with the guaranteed
    right end and the spectral range alongside.

    Raises:
        DomainError: disconnected graph (kappa' = 0) or fewer than 2 nodes
    """
    g = sys.graph
    if g.n < 2 or not is_connected(g):
        raise DomainError("bifurcation interval needs a connected graph with at least 2 nodes (edge-connectivity is 0)")
    kappa_prime = edge_connectivity(g)
    values = spectrum(g).eigenvalues
    lam_max = float(values[-1])
    lam_2 = float(values[1])
    intervals = []
    for branch, c in _branches(sys):
        scale = -1.0 / (2.0 * c)
        intervals.append(BifurcationInterval(
            branch=branch, coefficient=c,
            lower=scale / g.n, upper=scale * g.n / (2.0 * kappa_prime),
            guaranteed_upper=scale / (2.0 * kappa_prime * (1.0 - math.cos(math.pi / g.n))),
            spectral_lower=scale / lam_max, spectral_upper=scale / lam_2,
            edge_connectivity=kappa_prime,
        ))
    return intervals


def path_interval_limit(c: float) -> float:
    """Limit of the smallest critical coupling of P_N as N grows: -1/(8c)."""
    if c >= 0:
        raise DomainError("the path-graph limit needs a negative coefficient")
    return -1.0 / (8.0 * c)


# ---------------------------------------------------------------------------
# Centre of mass
# ---------------------------------------------------------------------------

@dataclass
class ComSeries:
    """Node-averaged position and momentum along a trajectory."""

    times: np.ndarray
    q_bar: np.ndarray
    p_bar: np.ndarray
    mean_sin: np.ndarray

    def __len__(self) -> int:
        return self.times.size


def centre_of_mass(traj: Trajectory) -> ComSeries:
    if len(traj) == 0:
        raise DomainError("empty trajectory")
    return ComSeries(times=traj.times.copy(), q_bar=traj.q.mean(axis=1), p_bar=traj.p.mean(axis=1),
                     mean_sin=np.sin(traj.q).mean(axis=1))


def com_residual(series: ComSeries) -> float:
    """
    Max residual of the centre-of-mass equations on interior samples.

    Central differences check dq_bar/dt = p_bar and dp_bar/dt = -mean(sin q).
    """
    if len(series) < 3:
        raise DomainError("centre-of-mass residual needs at least 3 samples")
    dt = series.times[2:] - series.times[:-2]
    dq = (series.q_bar[2:] - series.q_bar[:-2]) / dt
    dp = (series.p_bar[2:] - series.p_bar[:-2]) / dt
    return float(max(np.max(np.abs(dq - series.p_bar[1:-1])),
                     np.max(np.abs(dp + series.mean_sin[1:-1]))))


def _sample_spacing(series: ComSeries) -> float:
    spacing = np.diff(series.times)
    dt = float(np.mean(spacing))
    if np.max(np.abs(spacing - dt)) > 1e-9 * max(1.0, abs(dt)):
        raise DomainError("frequency analysis needs uniformly spaced samples")
    return abs(dt)


def com_spectrum(series: ComSeries) -> Tuple[np.ndarray, np.ndarray]:
    """
    Hann-windowed amplitude spectrum of q_bar.

    Returns:
        (angular frequencies, amplitudes), DC included
    """
    if len(series) < 2:
        raise DomainError("spectrum needs at least 2 samples")
    dt = _sample_spacing(series)
    centered = series.q_bar - np.mean(series.q_bar)
    window = np.hanning(centered.size)
    magnitudes = np.abs(np.fft.rfft(centered * window)) * 2.0 / np.sum(window)
    omegas = 2.0 * np.pi * np.fft.rfftfreq(centered.size, d=dt)
    return omegas, magnitudes


def dominant_frequency(series: ComSeries) -> float:
    """
    Angular frequency of the strongest non-DC spectral peak of q_bar.

    The peak bin is refined by quadratic interpolation of the log magnitudes
    of its neighbours.

    Raises:
        DomainError: fewer than 1024 samples or non-uniform spacing
        NoOscillationError: q_bar is constant
    """
    if len(series) < MIN_FREQUENCY_SAMPLES:
        raise DomainError(f"dominant frequency needs at least {MIN_FREQUENCY_SAMPLES} samples, got {len(series)}")
    centered = series.q_bar - np.mean(series.q_bar)
    if np.max(np.abs(centered)) <= 1e-12:
        raise NoOscillationError("centre-of-mass position is constant; no oscillation to measure")
    omegas, magnitudes = com_spectrum(series)
    k = 1 + int(np.argmax(magnitudes[1:]))
    if k + 1 >= magnitudes.size:
        return float(omegas[k])
    left, centre, right = np.log(np.maximum(magnitudes[k - 1:k + 2], 1e-300))
    denominator = left - 2.0 * centre + right
    offset = 0.5 * (left - right) / denominator if denominator != 0 else 0.0
    return float(omegas[k] + offset * (omegas[1] - omegas[0]))


# ---------------------------------------------------------------------------
# Relative coordinates for two pendula
# ---------------------------------------------------------------------------

def _require_pair(n: int) -> None:
    if n != 2:
        raise DomainError(f"relative coordinates are defined for N = 2 only (got N = {n})")


def to_relative(s: SystemState) -> Tuple[float, float, float, float]:
    """(q_s, p_s, q_a, p_a) = (q1 - q2, p1 - p2, q1 + q2, p1 + p2)."""
    _require_pair(s.n)
    q1, q2 = s.q
    p1, p2 = s.p
    return q1 - q2, p1 - p2, q1 + q2, p1 + p2


def from_relative(q_s: float, p_s: float, q_a: float, p_a: float, t: float = 0.0) -> SystemState:
    return SystemState([(q_a + q_s) / 2.0, (q_a - q_s) / 2.0], [(p_a + p_s) / 2.0, (p_a - p_s) / 2.0], t)


def _edge_count(sys: CoupledSystem) -> int:
    _require_pair(sys.n)
    return len(sys.graph.edges)


def relative_vector_field(sys: CoupledSystem, rel: Tuple[float, float, float, float]) -> np.ndarray:
    """
    Derivatives (q_s', p_s', q_a', p_a') of the two-pendulum system in relative coordinates.
    """
    coupling = sys.kappa * _edge_count(sys)
    q_s, p_s, q_a, p_a = (float(v) for v in rel)
    pot = sys.potential
    return np.array([
        p_s + 2.0 * coupling * pot.evaluate(q_s, p_s, 0, 1),
        -2.0 * (math.cos(q_a / 2.0) * math.sin(q_s / 2.0) + coupling * pot.evaluate(q_s, p_s, 1, 0)),
        p_a,
        -2.0 * math.cos(q_s / 2.0) * math.sin(q_a / 2.0),
    ])


def relative_hamiltonian(sys: CoupledSystem, rel: Tuple[float, float, float, float]) -> float:
    """(p_s^2 + p_a^2)/2 - 4 cos(q_a/2) cos(q_s/2) + 2 kappa G(q_s, p_s), i.e. twice H."""
    coupling = sys.kappa * _edge_count(sys)
    q_s, p_s, q_a, p_a = (float(v) for v in rel)
    return (0.5 * (p_s * p_s + p_a * p_a) - 4.0 * math.cos(q_a / 2.0) * math.cos(q_s / 2.0)
            + 2.0 * coupling * sys.potential.evaluate(q_s, p_s))
