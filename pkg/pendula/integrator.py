"""
Time integration of the pendula flow and of its variational (tangent) flow.

The primary method is the embedded Dormand-Prince 5(4) pair with FSAL and a
PI step-size controller; fixed-step RK4 is kept for reproducibility checks.
Steps are clipped so the solution lands exactly on every sample instant.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from pendula.config import ABS_TOL, MAX_STEP, MIN_STEP, REL_TOL, REORTH_PERIOD, RK4_STEP, SAMPLE_INTERVAL
from pendula.dynamics import CoupledSystem, SystemState
from pendula.errors import DimensionError, DivergenceError, DomainError, StiffnessError

logger = logging.getLogger(__name__)

METHODS = ('rk45', 'rk4')

# Dormand-Prince 5(4) tableau
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
# b - b_hat (fifth-order minus embedded fourth-order weights)
_E = (
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
)

_SAFETY = 0.9
_BETA = 0.04
_ALPHA = 0.2 - 0.75 * _BETA
_FAC_MIN = 0.2
_FAC_MAX = 10.0
_MAX_NONFINITE_RETRIES = 30


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator settings; every field lands in output metadata."""

    method: str = 'rk45'
    abs_tol: float = ABS_TOL
    rel_tol: float = REL_TOL
    max_step: float = MAX_STEP
    step: float = RK4_STEP
    sample_interval: float = SAMPLE_INTERVAL
    min_step: float = MIN_STEP

    def __post_init__(self):
        if self.method not in METHODS:
            raise DomainError(f"unknown integrator method {self.method!r} (choose from {', '.join(METHODS)})")
        for name in ('abs_tol', 'rel_tol', 'max_step', 'step', 'sample_interval', 'min_step'):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise DomainError(f"integrator setting {name} must be > 0, got {value!r}")

    def with_tolerance(self, tol: float) -> 'IntegratorConfig':
        return IntegratorConfig(self.method, tol, tol, self.max_step, self.step,
                                self.sample_interval, self.min_step)

    def with_sampling(self, sample_interval: float) -> 'IntegratorConfig':
        return IntegratorConfig(self.method, self.abs_tol, self.rel_tol, self.max_step, self.step,
                                sample_interval, self.min_step)

    def as_metadata(self) -> Dict[str, object]:
        return {
            'integrator': self.method,
            'abs_tol': self.abs_tol,
            'rel_tol': self.rel_tol,
            'max_step': self.max_step,
            'rk4_step': self.step,
            'sample_interval': self.sample_interval,
        }


@dataclass
class Trajectory:
    """Sampled orbit. times run monotonically in the direction of integration."""

    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    energies: np.ndarray
    energy_drift: float
    steps_accepted: int = 0
    steps_rejected: int = 0

    def __len__(self) -> int:
        return self.times.size

    @property
    def n(self) -> int:
        return self.q.shape[1]

    @property
    def states(self) -> List[SystemState]:
        return [self.state_at(k) for k in range(len(self))]

    def state_at(self, k: int) -> SystemState:
        return SystemState(self.q[k], self.p[k], float(self.times[k]))

    @property
    def final_state(self) -> SystemState:
        return self.state_at(len(self) - 1)


@dataclass
class TangentHistory:
    """Tangent frames Y(t) captured at checkpoint instants (before any renormalisation)."""

    times: List[float] = field(default_factory=list)
    frames: List[np.ndarray] = field(default_factory=list)

    def append(self, t: float, frame: np.ndarray) -> None:
        self.times.append(t)
        self.frames.append(frame.copy())

    @property
    def final(self) -> np.ndarray:
        return self.frames[-1]


def sample_instants(duration: float, interval: float) -> np.ndarray:
    """Instants interval, 2*interval, ... up to |duration|, plus the end point, signed like duration."""
    span = abs(duration)
    count = int(math.floor(span / interval + 1e-9))
    grid = interval * np.arange(1, count + 1)
    if count == 0 or span - grid[-1] > 1e-9 * max(1.0, span):
        grid = np.append(grid, span)
    else:
        grid[-1] = span
    return math.copysign(1.0, duration) * grid


def _error_norm(err: np.ndarray, x_old: np.ndarray, x_new: np.ndarray, cfg: IntegratorConfig) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(x_old), np.abs(x_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def _initial_step(f: Callable, x: np.ndarray, k1: np.ndarray, cfg: IntegratorConfig) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(x)
    d0 = float(np.sqrt(np.mean((x / scale) ** 2)))
    d1 = float(np.sqrt(np.mean((k1 / scale) ** 2)))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return min(h0, cfg.max_step)


def _dopri_stages(f: Callable, x: np.ndarray, k1: np.ndarray, h: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One Dormand-Prince trial step; returns (x_new, f(x_new), local error estimate)."""
    ks = [k1]
    for row in _A[1:6]:
        increment = sum(a * k for a, k in zip(row, ks) if a != 0.0)
        ks.append(f(x + h * increment))
    x_new = x + h * sum(b * k for b, k in zip(_A[6], ks) if b != 0.0)
    k7 = f(x_new)
    ks.append(k7)
    err = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
    return x_new, k7, err


def _rk4_step(f: Callable, x: np.ndarray, h: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def solve(f: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, stops: np.ndarray,
          cfg: IntegratorConfig,
          on_stop: Callable[[int, float, np.ndarray], Optional[np.ndarray]]) -> Tuple[int, int]:
    """
    Integrate the autonomous system x' = f(x) from t = 0 through each time in stops.

    Args:
        f: Right-hand side on flat vectors
        x0: Initial state
        stops: Monotone instants (all positive or all negative) where on_stop is called
        cfg: Integrator settings
        on_stop: Called as on_stop(index, t, x); may return a replacement state

    Returns:
        (accepted steps, rejected steps)

    Raises:
        StiffnessError: adaptive step fell below cfg.min_step
        DivergenceError: state became non-finite
    """
    x = np.array(x0, dtype=float, copy=True)
    t = 0.0
    if not len(stops):
        return 0, 0
    direction = 1.0 if stops[-1] > 0 else -1.0
    accepted = rejected = 0

    if cfg.method == 'rk4':
        for index, target in enumerate(stops):
            while direction * (target - t) > 1e-12 * max(1.0, abs(target)):
                h = direction * min(cfg.step, abs(target - t))
                x = _rk4_step(f, x, h)
                t = target if abs(target - (t + h)) <= 1e-12 * max(1.0, abs(target)) else t + h
                accepted += 1
                if not np.all(np.isfinite(x)):
                    raise DivergenceError(f"state became non-finite at t = {t:.6g}")
            replacement = on_stop(index, float(target), x)
            if replacement is not None:
                x = np.array(replacement, dtype=float, copy=True)
        return accepted, 0

    k1 = f(x)
    h = _initial_step(f, x, k1, cfg)
    err_prev = 1e-4
    for index, target in enumerate(stops):
        while True:
            remaining = direction * (target - t)
            if remaining <= 1e-12 * max(1.0, abs(target)):
                break
            clipped = h >= remaining
            h_step = remaining if clipped else h
            if h_step < cfg.min_step and not clipped:
                raise StiffnessError(f"step size {h_step:.3e} underflowed at t = {t:.6g}")
            nonfinite = 0
            while True:
                x_new, k_new, err_vec = _dopri_stages(f, x, k1, direction * h_step)
                if np.all(np.isfinite(x_new)) and np.all(np.isfinite(err_vec)):
                    break
                nonfinite += 1
                if nonfinite > _MAX_NONFINITE_RETRIES:
                    raise DivergenceError(f"state became non-finite at t = {t:.6g}")
                h_step *= 0.1
                clipped = False
            err = _error_norm(err_vec, x, x_new, cfg)
            if err <= 1.0:
                t = target if clipped else t + direction * h_step
                x, k1 = x_new, k_new
                accepted += 1
                fac = _SAFETY * max(err, 1e-10) ** (-_ALPHA) * err_prev ** _BETA
                fac = min(_FAC_MAX, max(_FAC_MIN, fac))
                if not clipped:
                    h = min(cfg.max_step, h_step * fac)
                else:
                    h = min(cfg.max_step, max(h, h_step * fac))
                err_prev = max(err, 1e-4)
            else:
                rejected += 1
                fac = max(_FAC_MIN, _SAFETY * err ** (-0.2))
                h = h_step * min(1.0, fac)
                if h < cfg.min_step:
                    raise StiffnessError(f"step size {h:.3e} underflowed at t = {t:.6g}")
        replacement = on_stop(index, float(target), x)
        if replacement is not None:
            x = np.array(replacement, dtype=float, copy=True)
            k1 = f(x)
    logger.debug("integration finished: %d accepted, %d rejected steps", accepted, rejected)
    return accepted, rejected


def _check_duration(T: float) -> float:
    T = float(T)
    if not math.isfinite(T) or T == 0.0:
        raise DomainError(f"integration time must be finite and non-zero, got {T}")
    return T


def integrate(sys: CoupledSystem, s0: SystemState, T: float,
              cfg: Optional[IntegratorConfig] = None) -> Trajectory:
    """
    Integrate the equations of motion and sample every cfg.sample_interval.

    Args:
        sys: Coupled system
        s0: Initial state
        T: Duration; negative integrates backward in time
        cfg: Integrator settings (defaults from config)

    Returns:
        Trajectory starting at s0.t with energies and relative energy drift
    """
    cfg = cfg or IntegratorConfig()
    T = _check_duration(T)
    if s0.n != sys.n:
        raise DimensionError(f"state has {s0.n} nodes, graph has {sys.n}")
    stops = sample_instants(T, cfg.sample_interval)
    n = sys.n
    samples = np.empty((stops.size + 1, 2 * n))
    samples[0] = s0.as_vector()

    def record(index, t, x):
        samples[index + 1] = x
        return None

    accepted, rejected = solve(sys.rhs, samples[0], stops, cfg, record)
    return _build_trajectory(sys, s0.t, stops, samples, accepted, rejected)


def _build_trajectory(sys: CoupledSystem, t0: float, stops: np.ndarray, samples: np.ndarray,
                      accepted: int, rejected: int) -> Trajectory:
    n = sys.n
    energies = np.array([sys.energy(x) for x in samples])
    h0 = energies[0]
    drift = float(np.max(np.abs(energies - h0)) / (1.0 + abs(h0)))
    times = t0 + np.concatenate([[0.0], stops])
    return Trajectory(times=times, q=samples[:, :n].copy(), p=samples[:, n:].copy(),
                      energies=energies, energy_drift=drift,
                      steps_accepted=accepted, steps_rejected=rejected)


def integrate_with_tangent(sys: CoupledSystem, s0: SystemState, T: float,
                           cfg: Optional[IntegratorConfig] = None,
                           basis0: Optional[np.ndarray] = None,
                           checkpoint_interval: float = REORTH_PERIOD,
                           on_checkpoint: Optional[Callable[[float, np.ndarray], Optional[np.ndarray]]] = None,
                           ) -> Tuple[Trajectory, TangentHistory]:
    """
    Integrate x' = f(x) jointly with the variational equation Y' = J(x) Y.

    Base and tangent share one augmented state, so they share step sizes.

    Args:
        sys: Coupled system
        s0: Initial state
        T: Duration (negative for backward)
        cfg: Integrator settings
        basis0: Initial 2N x 2N tangent frame (identity by default)
        checkpoint_interval: Spacing of tangent checkpoints
        on_checkpoint: Called with (t, Y) at each checkpoint; a returned
            matrix replaces Y (used for reorthonormalisation)

    Returns:
        (trajectory of the base orbit, tangent frames at checkpoints)
    """
    cfg = cfg or IntegratorConfig()
    T = _check_duration(T)
    if s0.n != sys.n:
        raise DimensionError(f"state has {s0.n} nodes, graph has {sys.n}")
    dim = 2 * sys.n
    frame = np.eye(dim) if basis0 is None else np.array(basis0, dtype=float)
    if frame.shape != (dim, dim):
        raise DimensionError(f"tangent basis must be {dim}x{dim}, got {frame.shape}")
    if checkpoint_interval <= 0:
        raise DomainError("checkpoint interval must be > 0")

    samples_at = sample_instants(T, cfg.sample_interval)
    checkpoints_at = sample_instants(T, checkpoint_interval)
    stops = np.union1d(np.round(samples_at, 12), np.round(checkpoints_at, 12))
    if T < 0:
        stops = stops[::-1]
    sample_keys = set(np.round(samples_at, 12).tolist())
    checkpoint_keys = set(np.round(checkpoints_at, 12).tolist())

    def augmented(z):
        x = z[:dim]
        y = z[dim:].reshape(dim, dim)
        return np.concatenate([sys.rhs(x), (sys.jacobian_matrix(x) @ y).ravel()])

    samples = [s0.as_vector()]
    sample_times = []
    history = TangentHistory()
    history.append(s0.t, frame)

    def at_stop(index, t, z):
        key = round(t, 12)
        if key in sample_keys:
            samples.append(z[:dim].copy())
            sample_times.append(t)
        if key in checkpoint_keys:
            y = z[dim:].reshape(dim, dim)
            history.append(s0.t + t, y)
            if on_checkpoint is not None:
                replacement = on_checkpoint(s0.t + t, y)
                if replacement is not None:
                    return np.concatenate([z[:dim], np.asarray(replacement, dtype=float).ravel()])
        return None

    z0 = np.concatenate([s0.as_vector(), frame.ravel()])
    accepted, rejected = solve(augmented, z0, stops, cfg, at_stop)
    trajectory = _build_trajectory(sys, s0.t, np.array(sample_times), np.array(samples), accepted, rejected)
    return trajectory, history
