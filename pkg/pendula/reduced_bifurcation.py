"""
One-degree-of-freedom reduced system on anti-synchrony subspaces.

For a sign vector v the state q = x v, p = y v stays on the subspace and
(x, y) obeys a pendulum-like system with d_pm opposite-sign neighbours
(difference 2x) and d_0 zero neighbours (difference x).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from pendula.config import ROOT_GRID_STEP, ROOT_TOL
from pendula.dynamics import CoupledSystem, InteractionPotential, SystemState
from pendula.errors import DomainError
from pendula.graph_core import SignVector, partition_counts, sign_vector_from_entries
from pendula.integrator import IntegratorConfig, sample_instants, solve

logger = logging.getLogger(__name__)

# First sample point above zero; keeps small post-bifurcation roots bracketed
_ROOT_FIRST_SAMPLE = 1e-6
AXES = ('x', 'y')


@dataclass(frozen=True)
class ReducedSystem:
    """Reduced vector field for a bivalent/trivalent pattern with counts (d_pm, d_0)."""

    d_pm: int
    d_0: int
    potential: InteractionPotential
    kappa: float

    def __post_init__(self):
        if self.d_pm < 0 or self.d_0 < 0 or (self.d_pm == 0 and self.d_0 == 0):
            raise DomainError(f"reduced system needs d_pm, d_0 >= 0, not both zero (got {self.d_pm}, {self.d_0})")
        if not math.isfinite(self.kappa) or self.kappa < 0:
            raise DomainError(f"kappa must be finite and >= 0, got {self.kappa}")

    @property
    def lam(self) -> int:
        return 2 * self.d_pm + self.d_0

    def with_kappa(self, kappa: float) -> 'ReducedSystem':
        return ReducedSystem(self.d_pm, self.d_0, self.potential, float(kappa))

    def _coupled(self, x, y, dx: int, dy: int, kappa: Optional[float] = None):
        """kappa * (d_pm * 2^(dx+dy-1) G_dxdy(2x, 2y) + d_0 G_dxdy(x, y)), chain-rule scaled."""
        kappa = self.kappa if kappa is None else kappa
        pot = self.potential
        scale = 2.0 ** (dx + dy - 1)
        return kappa * (self.d_pm * scale * pot.evaluate(2 * x, 2 * y, dx, dy) + self.d_0 * pot.evaluate(x, y, dx, dy))

    def xdot(self, x, y, kappa: Optional[float] = None):
        """f(x, y) = y + kappa d_pm G_01(2x, 2y) + kappa d_0 G_01(x, y)."""
        return y + self._coupled(x, y, 0, 1, kappa)

    def ydot(self, x, y, kappa: Optional[float] = None):
        """g(x, y) = -sin x - kappa d_pm G_10(2x, 2y) - kappa d_0 G_10(x, y)."""
        return -np.sin(x) - self._coupled(x, y, 1, 0, kappa)

    def rhs(self, z: np.ndarray) -> np.ndarray:
        return np.array([self.xdot(z[0], z[1]), self.ydot(z[0], z[1])], dtype=float)

    def jacobian(self, x: float, y: float) -> np.ndarray:
        return np.array([
            [self._coupled(x, y, 1, 1), 1.0 + self._coupled(x, y, 0, 2)],
            [-math.cos(x) - self._coupled(x, y, 2, 0), -self._coupled(x, y, 1, 1)],
        ])

    def hamiltonian(self, x, y):
        """K = y^2/2 - cos x + kappa (d_pm/2) G(2x, 2y) + kappa d_0 G(x, y)."""
        return 0.5 * y * y - np.cos(x) + self._coupled(x, y, 0, 0)


def reduce(sys: CoupledSystem, v: SignVector) -> ReducedSystem:
    """
    Reduced system of sys on the anti-synchrony subspace spanned by v.

    Raises:
        DomainError: v is not an exact Laplacian eigenvector of sys.graph
        NotClassConstantError: v is an eigenvector but its partition is not odd-balanced,
            so the subspace is not invariant
    """
    verified = sign_vector_from_entries(sys.graph, v.entries)
    d_pm, d_0 = partition_counts(verified, sys.graph)
    return ReducedSystem(d_pm, d_0, sys.potential, sys.kappa)


def reduced_hamiltonian(rs: ReducedSystem, x, y):
    return rs.hamiltonian(x, y)


def reduced_vector_field(rs: ReducedSystem, x: float, y: float) -> Tuple[float, float]:
    return float(rs.xdot(x, y)), float(rs.ydot(x, y))


def reduced_origin_eigenvalues(rs: ReducedSystem) -> Tuple[complex, complex]:
    """+-sqrt(-(1 + 2 kappa c10 lambda)(1 + 2 kappa c01 lambda))."""
    pot = rs.potential
    radicand = -(1.0 + 2.0 * rs.kappa * pot.c10 * rs.lam) * (1.0 + 2.0 * rs.kappa * pot.c01 * rs.lam)
    root = complex(math.sqrt(radicand), 0.0) if radicand >= 0 else complex(0.0, math.sqrt(-radicand))
    return root, -root


def quartic_coefficients(rs: ReducedSystem) -> dict:
    """
    Coefficients of the fourth-order expansion of K around the origin.

    Keys: 'x2', 'y2', 'x4', 'y4', 'x2y2'.
    """
    pot = rs.potential
    k = rs.kappa
    weight = 8 * rs.d_pm + rs.d_0
    return {
        'x2': 0.5 + k * rs.lam * pot.c10,
        'y2': 0.5 + k * rs.lam * pot.c01,
        'x4': k * pot.c20 * weight - 1.0 / 24.0,
        'y4': k * pot.c02 * weight,
        'x2y2': k * pot.c11 * weight,
    }


# ---------------------------------------------------------------------------
# Equilibria and pitchforks
# ---------------------------------------------------------------------------

def _axis_function(rs: ReducedSystem, axis: str):
    if axis == 'x':
        return lambda s: rs.ydot(s, 0.0)
    if axis == 'y':
        return lambda s: rs.xdot(0.0, s)
    raise DomainError(f"axis must be 'x' or 'y', got {axis!r}")


def _bisect(fn, lo: float, hi: float, f_lo: float, tol: float) -> float:
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = float(fn(mid))
        if f_mid == 0.0:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def equilibria_on_axis(rs: ReducedSystem, axis: str = 'x', grid_step: float = ROOT_GRID_STEP,
                       tol: float = ROOT_TOL) -> np.ndarray:
    """
    Equilibria of the reduced system on one axis within [-pi, pi].

    On the x axis these are the roots of g(x, 0); on the y axis the roots of
    f(0, y). Roots on (0, pi] are bracketed on a grid of the given step
    (with an extra sample just above zero), refined by bisection and mirrored
    by oddness; 0 is always included.

    Returns:
        Sorted array of roots
    """
    fn = _axis_function(rs, axis)
    count = int(round(math.pi / grid_step))
    grid = np.concatenate([[_ROOT_FIRST_SAMPLE], np.linspace(math.pi / count, math.pi, count)])
    values = np.array([float(fn(s)) for s in grid])
    roots = []
    for k in range(len(grid) - 1):
        a, b = grid[k], grid[k + 1]
        fa, fb = values[k], values[k + 1]
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(_bisect(fn, a, b, fa, tol))
    if abs(values[-1]) <= 1e-12:
        roots.append(math.pi)
    positive = []
    for r in sorted(roots):
        if r > _ROOT_FIRST_SAMPLE / 2 and (not positive or r - positive[-1] > 1e-9):
            positive.append(r)
    return np.array(sorted([-r for r in positive] + [0.0] + positive))


def classify_equilibrium(rs: ReducedSystem, x: float, y: float) -> str:
    """'center', 'saddle' or 'degenerate' from the 2x2 linearisation."""
    jac = rs.jacobian(x, y)
    if abs(np.linalg.det(jac)) <= 1e-12:
        return 'degenerate'
    eigenvalues = np.linalg.eigvals(jac)
    return 'saddle' if np.max(np.abs(eigenvalues.real)) > 1e-9 else 'center'


@dataclass(frozen=True)
class NonDegeneracy:
    """Finite-difference pitchfork non-degeneracy values next to their closed forms."""

    axis: str
    kappa_crit: float
    third_derivative: float
    third_derivative_closed: float
    mixed_derivative: float
    mixed_derivative_closed: float

    def agrees(self, rel_tol: float = 1e-3) -> bool:
        def close(a, b):
            return abs(a - b) <= rel_tol * max(abs(b), 1e-12)
        return (close(self.third_derivative, self.third_derivative_closed)
                and close(self.mixed_derivative, self.mixed_derivative_closed))

    @property
    def non_degenerate(self) -> bool:
        return abs(self.third_derivative) > 1e-9 and abs(self.mixed_derivative) > 1e-9


def nondegeneracy(rs: ReducedSystem, axis: str = 'x', h: float = 1e-2, dk: float = 1e-3) -> NonDegeneracy:
    """
    Third derivative along the axis and mixed kappa-derivative at the critical coupling.

    x axis, g(x, 0, kappa):
        d3g/dx3 = 1 + 12 c20 (8 d_pm + d_0) / (lambda c10),  d2g/dkappa dx = -2 lambda c10
    y axis, f(0, y, kappa):
        d3f/dy3 = -12 c02 (8 d_pm + d_0) / (lambda c01),     d2f/dkappa dy = 2 lambda c01

    Raises:
        DomainError: the branch coefficient is not negative (no critical coupling)
    """
    pot = rs.potential
    weight = 8 * rs.d_pm + rs.d_0
    if axis not in AXES:
        raise DomainError(f"axis must be 'x' or 'y', got {axis!r}")
    c = pot.c10 if axis == 'x' else pot.c01
    if c >= 0:
        raise DomainError(f"no critical coupling on the {axis} axis (coefficient {c} >= 0)")
    kappa_crit = -1.0 / (2.0 * c * rs.lam)
    if axis == 'x':
        fn = lambda s, k: float(rs.ydot(s, 0.0, k))
        third_closed = 1.0 + 12.0 * pot.c20 * weight / (rs.lam * pot.c10)
        mixed_closed = -2.0 * rs.lam * pot.c10
    else:
        fn = lambda s, k: float(rs.xdot(0.0, s, k))
        third_closed = -12.0 * pot.c02 * weight / (rs.lam * pot.c01)
        mixed_closed = 2.0 * rs.lam * pot.c01
    k0 = kappa_crit
    third = (fn(2 * h, k0) - 2 * fn(h, k0) + 2 * fn(-h, k0) - fn(-2 * h, k0)) / (2 * h ** 3)
    hs = 1e-4
    mixed = (fn(hs, k0 + dk) - fn(-hs, k0 + dk) - fn(hs, k0 - dk) + fn(-hs, k0 - dk)) / (4 * hs * dk)
    return NonDegeneracy(axis, kappa_crit, third, third_closed, mixed, mixed_closed)


@dataclass(frozen=True)
class PitchforkPoint:
    axis: str
    kappa: float
    predicted: Optional[float]
    nondegeneracy: Optional[NonDegeneracy] = None


@dataclass
class BranchDiagram:
    """Axis equilibria per kappa with their class, and the detected pitchforks."""

    kappas: np.ndarray
    equilibria: List[List[Tuple[float, float, str]]]
    bifurcations: List[PitchforkPoint]
    warnings: List[str] = field(default_factory=list)

    def rows(self) -> List[Tuple[float, float, float, str]]:
        """Flat (kappa, x_eq, y_eq, class) rows."""
        return [(float(k), x, y, cls) for k, eqs in zip(self.kappas, self.equilibria) for x, y, cls in eqs]


def _check_kappa_grid(kappas: Sequence[float]) -> np.ndarray:
    kappas = np.asarray(kappas, dtype=float)
    if kappas.ndim != 1 or kappas.size < 2:
        raise DomainError("kappa grid needs at least two values")
    if np.any(np.diff(kappas) <= 0):
        raise DomainError("kappa grid must be strictly increasing")
    if kappas[0] < 0:
        raise DomainError("kappa grid must be non-negative")
    return kappas


def detect_pitchfork(rs: ReducedSystem, kappas: Sequence[float], axes: Sequence[str] = AXES,
                     neighbourhood: float = 1.0) -> BranchDiagram:
    """
    Sweep kappa and report where the count of axis equilibria near the origin goes 1 -> 3.

    Args:
        rs: Reduced system (its kappa is replaced by each grid value)
        kappas: Strictly increasing coupling grid
        axes: Which axes to sweep ('x' uses g(x, 0), 'y' uses f(0, y))
        neighbourhood: Only equilibria with |s| < neighbourhood count

    Returns:
        BranchDiagram; warnings flag predicted critical values the grid misses
    """
    kappas = _check_kappa_grid(kappas)
    step = float(np.max(np.diff(kappas)))
    equilibria: List[List[Tuple[float, float, str]]] = []
    counts = {axis: [] for axis in axes}
    for kappa in kappas:
        rs_k = rs.with_kappa(kappa)
        row = []
        for axis in axes:
            roots = equilibria_on_axis(rs_k, axis)
            near = [r for r in roots if abs(r) < neighbourhood]
            counts[axis].append(len(near))
            for r in roots:
                x, y = (float(r), 0.0) if axis == 'x' else (0.0, float(r))
                if axis == 'y' and r == 0.0 and 'x' in axes:
                    continue
                row.append((x, y, classify_equilibrium(rs_k, x, y)))
        equilibria.append(row)

    pot = rs.potential
    bifurcations = []
    warnings = []
    for axis in axes:
        c = pot.c10 if axis == 'x' else pot.c01
        predicted = -1.0 / (2.0 * c * rs.lam) if c < 0 else None
        found = [float(kappas[k + 1]) for k in range(len(kappas) - 1)
                 if counts[axis][k] == 1 and counts[axis][k + 1] == 3]
        for kappa in found:
            nd = nondegeneracy(rs, axis) if predicted is not None else None
            bifurcations.append(PitchforkPoint(axis, kappa, predicted, nd))
        if predicted is None:
            continue
        if not kappas[0] < predicted <= kappas[-1]:
            warnings.append(f"{axis}-axis critical coupling {predicted:.6g} lies outside the kappa grid "
                            f"[{kappas[0]:.6g}, {kappas[-1]:.6g}]")
        elif not any(abs(k - predicted) <= step + 1e-12 for k in found):
            warnings.append(f"no {axis}-axis pitchfork detected within one grid step ({step:.3g}) of "
                            f"{predicted:.6g}; refine the kappa grid around it")
    for message in warnings:
        logger.warning(message)
    return BranchDiagram(kappas=kappas, equilibria=equilibria, bifurcations=bifurcations, warnings=warnings)


# ---------------------------------------------------------------------------
# Transversal stability
# ---------------------------------------------------------------------------

def transversal_basis(v: SignVector) -> np.ndarray:
    """Orthonormal basis (2N x (2N-2)) of the complement of span{(v, 0), (0, v)}."""
    direction = v.as_array() / np.linalg.norm(v.as_array())
    n = direction.size
    e_q = np.concatenate([direction, np.zeros(n)])
    e_p = np.concatenate([np.zeros(n), direction])
    q, _ = np.linalg.qr(np.column_stack([e_q, e_p, np.eye(2 * n)]))
    return q[:, 2:]


def transversal_eigenvalues(sys: CoupledSystem, v: SignVector, x: float) -> np.ndarray:
    """Eigenvalues of the Jacobian at (x v, 0) projected on the transversal complement."""
    complement = transversal_basis(v)
    state = np.concatenate([x * v.as_array(), np.zeros(sys.n)])
    return np.linalg.eigvals(complement.T @ sys.jacobian_matrix(state) @ complement)


@dataclass
class StabilityMap:
    """stable[i, j] for kappas[i], xs[j]; max_real is the largest |Re| of the transversal eigenvalues."""

    xs: np.ndarray
    kappas: np.ndarray
    stable: np.ndarray
    max_real: np.ndarray

    def rows(self) -> List[Tuple[float, float, int]]:
        return [(float(x), float(k), int(self.stable[i, j]))
                for i, k in enumerate(self.kappas) for j, x in enumerate(self.xs)]


def transversal_stability_map(sys: CoupledSystem, v: SignVector, xs: Sequence[float],
                              kappas: Sequence[float], tol: float = 1e-8) -> StabilityMap:
    """
    Classify each (x, kappa) as transversally elliptic (stable) or unstable.

    Stable means every transversal eigenvalue has |Re| <= tol.
    """
    sign_vector_from_entries(sys.graph, v.entries)
    xs = np.asarray(xs, dtype=float)
    kappas = np.asarray(kappas, dtype=float)
    max_real = np.empty((kappas.size, xs.size))
    for i, kappa in enumerate(kappas):
        sys_k = sys.with_kappa(kappa)
        for j, x in enumerate(xs):
            max_real[i, j] = float(np.max(np.abs(transversal_eigenvalues(sys_k, v, x).real)))
    return StabilityMap(xs=xs, kappas=kappas, stable=max_real <= tol, max_real=max_real)


# ---------------------------------------------------------------------------
# Reduced trajectories
# ---------------------------------------------------------------------------

@dataclass
class ReducedTrajectory:
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    energies: np.ndarray
    energy_drift: float


def integrate_reduced(rs: ReducedSystem, x0: float, y0: float, T: float,
                      cfg: Optional[IntegratorConfig] = None) -> ReducedTrajectory:
    """Integrate the reduced system with the same stepper as the full flow."""
    cfg = cfg or IntegratorConfig()
    if not math.isfinite(T) or T == 0:
        raise DomainError(f"integration time must be finite and non-zero, got {T}")
    stops = sample_instants(T, cfg.sample_interval)
    samples = np.empty((stops.size + 1, 2))
    samples[0] = (x0, y0)

    def record(index, t, z):
        samples[index + 1] = z
        return None

    solve(rs.rhs, samples[0], stops, cfg, record)
    energies = np.asarray(rs.hamiltonian(samples[:, 0], samples[:, 1]), dtype=float)
    drift = float(np.max(np.abs(energies - energies[0])) / (1.0 + abs(energies[0])))
    return ReducedTrajectory(times=np.concatenate([[0.0], stops]), x=samples[:, 0].copy(),
                             y=samples[:, 1].copy(), energies=energies, energy_drift=drift)


def embed_reduced(v: SignVector, x: float, y: float, t: float = 0.0) -> SystemState:
    """Full state (x v, y v)."""
    direction = v.as_array()
    return SystemState(x * direction, y * direction, t)


# ---------------------------------------------------------------------------
# Double cusp level sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalPoint:
    x: float
    y: float
    value: float
    kind: str


@dataclass
class LevelSetResult:
    """F sampled on ys x xs, sign of F - level, and the critical points of F."""

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    signs: np.ndarray
    level: float
    critical_points: List[CriticalPoint]
    warnings: List[str] = field(default_factory=list)

    def rows(self) -> List[Tuple[float, float, float]]:
        return [(float(x), float(y), float(self.values[i, j]))
                for i, y in enumerate(self.ys) for j, x in enumerate(self.xs)]


def double_cusp(a: float, alpha: float, beta: float, x, y):
    """F = x^4 + y^4 + a x^2 y^2 + alpha x^2 + beta y^2."""
    x2 = np.asarray(x, dtype=float) ** 2
    y2 = np.asarray(y, dtype=float) ** 2
    return x2 * x2 + y2 * y2 + a * x2 * y2 + alpha * x2 + beta * y2


def _cusp_gradient(a, alpha, beta, x, y) -> np.ndarray:
    return np.array([4 * x ** 3 + 2 * a * x * y * y + 2 * alpha * x,
                     4 * y ** 3 + 2 * a * x * x * y + 2 * beta * y])


def _cusp_hessian(a, alpha, beta, x, y) -> np.ndarray:
    return np.array([[12 * x * x + 2 * a * y * y + 2 * alpha, 4 * a * x * y],
                     [4 * a * x * y, 12 * y * y + 2 * a * x * x + 2 * beta]])


def classify_critical_point(a: float, alpha: float, beta: float, x: float, y: float) -> str:
    """'minimum', 'maximum', 'saddle' or 'degenerate' from the Hessian of F."""
    eigenvalues = np.linalg.eigvalsh(_cusp_hessian(a, alpha, beta, x, y))
    if np.min(np.abs(eigenvalues)) <= 1e-9:
        return 'degenerate'
    if np.all(eigenvalues > 0):
        return 'minimum'
    if np.all(eigenvalues < 0):
        return 'maximum'
    return 'saddle'


def _newton(a, alpha, beta, x, y, max_iter: int = 100) -> Optional[Tuple[float, float]]:
    z = np.array([x, y], dtype=float)
    for _ in range(max_iter):
        grad = _cusp_gradient(a, alpha, beta, *z)
        if np.max(np.abs(grad)) <= 1e-14:
            return float(z[0]), float(z[1])
        step, *_ = np.linalg.lstsq(_cusp_hessian(a, alpha, beta, *z), grad, rcond=None)
        z = z - step
        if not np.all(np.isfinite(z)):
            return None
        if np.max(np.abs(step)) <= 1e-15:
            break
    grad = _cusp_gradient(a, alpha, beta, *z)
    return (float(z[0]), float(z[1])) if np.max(np.abs(grad)) <= 1e-10 else None


def find_critical_points(a: float, alpha: float, beta: float, starts_per_axis: int = 9) -> List[CriticalPoint]:
    """Critical points of F by Newton's method from a symmetric grid of starts, deduplicated."""
    radius = 1.5 * math.sqrt(max(1.0, abs(alpha), abs(beta)))
    axis = np.linspace(-radius, radius, starts_per_axis)
    points: List[Tuple[float, float]] = []
    for x0 in axis:
        for y0 in axis:
            root = _newton(a, alpha, beta, x0, y0)
            if root is None:
                continue
            x, y = (0.0 if abs(c) < 1e-7 else c for c in root)
            if all(abs(x - px) > 1e-6 or abs(y - py) > 1e-6 for px, py in points):
                points.append((x, y))
    points.sort()
    return [CriticalPoint(x, y, float(double_cusp(a, alpha, beta, x, y)),
                          classify_critical_point(a, alpha, beta, x, y)) for x, y in points]


def double_cusp_levelset(a: float, alpha: float, beta: float, xs: Sequence[float], ys: Sequence[float],
                         level: float = 0.0) -> LevelSetResult:
    """
    Sample F on the grid, record the sign of F - level and locate critical points.

    a^2 = 4 is the degenerate double cusp and only produces a warning.
    """
    warnings = []
    if abs(a * a - 4.0) <= 1e-12:
        message = f"a = {a} gives a degenerate double cusp (a^2 = 4)"
        logger.warning(message)
        warnings.append(message)
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    xx, yy = np.meshgrid(xs, ys)
    values = double_cusp(a, alpha, beta, xx, yy)
    return LevelSetResult(xs=xs, ys=ys, values=values, signs=np.sign(values - level).astype(int),
                          level=float(level), critical_points=find_critical_points(a, alpha, beta),
                          warnings=warnings)
