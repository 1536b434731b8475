"""
Interaction potential, Hamiltonian, vector field and Jacobian of the coupled pendula network.

State vectors are flat arrays x = (q_1..q_N, p_1..p_N).
"""
import functools
import itertools
import logging
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from pendula.config import (
    POTENTIAL_CHECK_HALF_WIDTH,
    POTENTIAL_CHECK_POINTS,
    POTENTIAL_CHECK_TOL,
)
from pendula.errors import DimensionError, DomainError, PotentialFormatError
from pendula.graph_core import Graph

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Interaction potential
# ---------------------------------------------------------------------------

def _falling(power: int, order: int) -> int:
    """power * (power - 1) * ... (order factors); zero once the power is exhausted."""
    result = 1
    for k in range(order):
        result *= power - k
    return result


@dataclass(frozen=True)
class InteractionPotential:
    """
    Even polynomial G(x, y) = sum c_lm x^(2l) y^(2m).

    terms holds (l, m, c_lm) triples sorted by (l, m); zero coefficients are dropped.
    """

    terms: Tuple[Tuple[int, int, float], ...]
    name: str = "custom"

    def __post_init__(self):
        merged: Dict[Tuple[int, int], float] = {}
        for term in self.terms:
            try:
                l, m, c = term
            except (TypeError, ValueError):
                raise PotentialFormatError(f"potential term {term!r} is not an (l, m, c) triple")
            if int(l) != l or int(m) != m or l < 0 or m < 0:
                raise PotentialFormatError(f"potential indices must be non-negative integers, got ({l}, {m})")
            if not math.isfinite(float(c)):
                raise PotentialFormatError(f"coefficient c_{l}{m} is not finite")
            key = (int(l), int(m))
            merged[key] = merged.get(key, 0.0) + float(c)
        cleaned = tuple((l, m, c) for (l, m), c in sorted(merged.items()) if c != 0.0)
        object.__setattr__(self, 'terms', cleaned)

    @classmethod
    def from_coeffs(cls, coeffs: Dict[Tuple[int, int], float], name: str = "custom") -> 'InteractionPotential':
        return cls(tuple((l, m, c) for (l, m), c in coeffs.items()), name)

    @property
    def coeffs(self) -> Dict[Tuple[int, int], float]:
        return {(l, m): c for l, m, c in self.terms}

    def coefficient(self, l: int, m: int) -> float:
        return self.coeffs.get((l, m), 0.0)

    @property
    def c10(self) -> float:
        return self.coefficient(1, 0)

    @property
    def c01(self) -> float:
        return self.coefficient(0, 1)

    @property
    def c20(self) -> float:
        return self.coefficient(2, 0)

    @property
    def c02(self) -> float:
        return self.coefficient(0, 2)

    @property
    def c11(self) -> float:
        return self.coefficient(1, 1)

    def evaluate(self, x, y, dx: int = 0, dy: int = 0):
        """
        Partial derivative d^(dx+dy) G / dx^dx dy^dy, term-wise power rule.

        Args:
            x, y: Scalars or broadcastable numpy arrays
            dx, dy: Derivative orders (non-negative)

        Returns:
            float for scalar input, ndarray otherwise
        """
        if dx < 0 or dy < 0:
            raise DomainError(f"derivative orders must be non-negative, got ({dx}, {dy})")
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        total = np.zeros(np.broadcast(x, y).shape)
        for l, m, c in self.terms:
            fx = _falling(2 * l, dx)
            fy = _falling(2 * m, dy)
            if fx == 0 or fy == 0:
                continue
            total = total + c * fx * fy * x ** (2 * l - dx) * y ** (2 * m - dy)
        if total.ndim == 0:
            return float(total)
        return total

    def describe(self) -> str:
        body = " + ".join(f"{c:g}*x^{2 * l}*y^{2 * m}" for l, m, c in self.terms) or "0"
        return f"{self.name}: G(x,y) = {body}"


def eval_potential(pot: InteractionPotential, x, y, dx: int = 0, dy: int = 0):
    """G_{dx,dy}(x, y)."""
    return pot.evaluate(x, y, dx, dy)


def double_well() -> InteractionPotential:
    """G(x, y) = 1/4 - x^2 + x^4."""
    return InteractionPotential(((0, 0, 0.25), (1, 0, -1.0), (2, 0, 1.0)), name="double-well")


def harmonic() -> InteractionPotential:
    """G(x, y) = x^2 / 2."""
    return InteractionPotential(((1, 0, 0.5),), name="harmonic")


NAMED_POTENTIALS = {
    'double-well': double_well,
    'harmonic': harmonic,
}


def read_potential_file(path: str) -> InteractionPotential:
    """
    Read ``l m c_lm`` triples, one per line. Coefficients may be fractions like 1/4.
    """
    terms = []
    try:
        with open(path, 'r', encoding='utf-8') as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split('#', 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 3:
                    raise PotentialFormatError(f"{path}:{lineno}: expected 'l m c_lm', got {line!r}")
                try:
                    terms.append((int(parts[0]), int(parts[1]), float(Fraction(parts[2]))))
                except (ValueError, ZeroDivisionError):
                    raise PotentialFormatError(f"{path}:{lineno}: malformed term {line!r}")
    except OSError as e:
        raise PotentialFormatError(f"cannot read potential file {path}: {e}")
    if not terms:
        raise PotentialFormatError(f"{path}: no potential terms")
    return InteractionPotential(tuple(terms), name=os.path.basename(path))


def load_potential(spec: str) -> InteractionPotential:
    """Named potential (``double-well``, ``harmonic``) or a potential file path."""
    if spec in NAMED_POTENTIALS:
        return NAMED_POTENTIALS[spec]()
    if os.path.isfile(spec):
        return read_potential_file(spec)
    raise PotentialFormatError(
        f"unknown potential {spec!r} (named: {', '.join(sorted(NAMED_POTENTIALS))}, or a file path)"
    )


@functools.lru_cache(maxsize=32)
def potential_warnings(pot: InteractionPotential) -> Tuple[str, ...]:
    """
    Sample G on [-2pi, 2pi]^2 and warn if it dips below zero.

    A negative G voids the bounded-motion certificate but leaves the dynamics well defined.
    """
    axis = np.linspace(-POTENTIAL_CHECK_HALF_WIDTH, POTENTIAL_CHECK_HALF_WIDTH, POTENTIAL_CHECK_POINTS)
    xx, yy = np.meshgrid(axis, axis)
    lowest = float(np.min(pot.evaluate(xx, yy)))
    if lowest < -POTENTIAL_CHECK_TOL:
        message = (f"potential {pot.name} is negative on the sample grid (min {lowest:.3e}); "
                   f"the bounded-motion certificate does not apply")
        logger.warning(message)
        return (message,)
    return ()


# ---------------------------------------------------------------------------
# States and systems
# ---------------------------------------------------------------------------

@dataclass
class SystemState:
    """Phase-space point (q, p) at time t."""

    q: np.ndarray
    p: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.q = np.atleast_1d(np.asarray(self.q, dtype=float)).copy()
        self.p = np.atleast_1d(np.asarray(self.p, dtype=float)).copy()
        if self.q.ndim != 1 or self.q.shape != self.p.shape:
            raise DimensionError(f"q and p must be vectors of equal length, got {self.q.shape} and {self.p.shape}")
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))):
            raise DomainError("state contains non-finite values")

    @property
    def n(self) -> int:
        return self.q.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_vector(cls, x: Sequence[float], t: float = 0.0) -> 'SystemState':
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size % 2:
            raise DimensionError(f"state vector must have even length 2N, got {x.size}")
        half = x.size // 2
        return cls(x[:half], x[half:], t)


def weighted_laplacian(n: int, rows: np.ndarray, cols: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """L_w = D_w - W for symmetric edge weights w_ij = w_ji."""
    w = np.zeros((n, n))
    w[rows, cols] = weights
    w[cols, rows] = weights
    return np.diag(w.sum(axis=1)) - w


@dataclass(frozen=True)
class CoupledSystem:
    """
    Pendula on the nodes of a graph, coupled through G on every edge.

    H = sum(p_i^2/2 - cos q_i) + kappa * sum_edges G(q_i - q_j, p_i - p_j)
    """

    graph: Graph
    potential: InteractionPotential
    kappa: float
    _rows: np.ndarray = field(init=False, repr=False, compare=False)
    _cols: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kappa = float(self.kappa)
        if not math.isfinite(kappa) or kappa < 0:
            raise DomainError(f"coupling strength kappa must be finite and >= 0, got {self.kappa}")
        object.__setattr__(self, 'kappa', kappa)
        rows, cols = self.graph.edge_arrays()
        object.__setattr__(self, '_rows', rows)
        object.__setattr__(self, '_cols', cols)

    @property
    def n(self) -> int:
        return self.graph.n

    def with_kappa(self, kappa: float) -> 'CoupledSystem':
        return CoupledSystem(self.graph, self.potential, kappa)

    def _split(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape != (2 * self.n,):
            raise DimensionError(f"state has shape {x.shape}, system expects ({2 * self.n},)")
        return x[:self.n], x[self.n:]

    def _edge_sum(self, values: np.ndarray) -> np.ndarray:
        """Node i receives +value on edges (i, j) and -value on edges (j, i); values are odd."""
        n = self.n
        return (np.bincount(self._rows, weights=values, minlength=n)
                - np.bincount(self._cols, weights=values, minlength=n))

    def rhs(self, x: np.ndarray) -> np.ndarray:
        """Flat vector field (qdot, pdot)."""
        q, p = self._split(x)
        dq = q[self._rows] - q[self._cols]
        dp = p[self._rows] - p[self._cols]
        qdot = p.copy()
        pdot = -np.sin(q)
        if self.kappa != 0.0 and dq.size:
            qdot += self.kappa * self._edge_sum(np.atleast_1d(self.potential.evaluate(dq, dp, 0, 1)))
            pdot -= self.kappa * self._edge_sum(np.atleast_1d(self.potential.evaluate(dq, dp, 1, 0)))
        return np.concatenate([qdot, pdot])

    def energy(self, x: np.ndarray) -> float:
        q, p = self._split(x)
        h = float(np.sum(0.5 * p * p - np.cos(q)))
        if self.kappa != 0.0 and self._rows.size:
            dq = q[self._rows] - q[self._cols]
            dp = p[self._rows] - p[self._cols]
            h += self.kappa * float(np.sum(self.potential.evaluate(dq, dp)))
        return h

    def weighted_laplacians(self, x: np.ndarray) -> Dict[Tuple[int, int], np.ndarray]:
        """L^(11), L^(20), L^(02) with weights G_nm(q_i - q_j, p_i - p_j)."""
        q, p = self._split(x)
        dq = q[self._rows] - q[self._cols]
        dp = p[self._rows] - p[self._cols]
        result = {}
        for order in ((1, 1), (2, 0), (0, 2)):
            w = np.atleast_1d(self.potential.evaluate(dq, dp, *order)) if dq.size else np.zeros(0)
            result[order] = weighted_laplacian(self.n, self._rows, self._cols, w)
        return result

    def jacobian_matrix(self, x: np.ndarray) -> np.ndarray:
        q, _ = self._split(x)
        n = self.n
        laps = self.weighted_laplacians(x)
        k = self.kappa
        jac = np.empty((2 * n, 2 * n))
        jac[:n, :n] = k * laps[(1, 1)]
        jac[:n, n:] = np.eye(n) + k * laps[(0, 2)]
        jac[n:, :n] = -np.diag(np.cos(q)) - k * laps[(2, 0)]
        jac[n:, n:] = -k * laps[(1, 1)]
        return jac


def _check_state(sys: CoupledSystem, s: SystemState) -> np.ndarray:
    if s.n != sys.n:
        raise DimensionError(f"state has {s.n} nodes, graph has {sys.n}")
    return s.as_vector()


def vector_field(sys: CoupledSystem, s: SystemState) -> np.ndarray:
    """
    Equations of motion.

    qdot_i = p_i + kappa * sum_j a_ij G_01(q_i - q_j, p_i - p_j)
    pdot_i = -sin q_i - kappa * sum_j a_ij G_10(q_i - q_j, p_i - p_j)

    Returns:
        Length-2N vector (qdot, pdot)
    """
    return sys.rhs(_check_state(sys, s))


def hamiltonian(sys: CoupledSystem, s: SystemState) -> float:
    return sys.energy(_check_state(sys, s))


def jacobian(sys: CoupledSystem, s: SystemState) -> np.ndarray:
    """
    2N x 2N linearisation in weighted-Laplacian block form.

        [[ kappa L11,                 I + kappa L02 ],
         [ -diag(cos q) - kappa L20,  -kappa L11    ]]
    """
    return sys.jacobian_matrix(_check_state(sys, s))


def bounded_motion_certificate(sys: CoupledSystem, s: SystemState) -> bool:
    """
    True when H <= 2 - N, which confines every pendulum below the upper position.

    Sufficient, not necessary. Requires N >= 2.
    """
    if sys.n < 2:
        raise DomainError("bounded-motion certificate needs at least 2 pendula")
    return bool(hamiltonian(sys, s) <= 2 - sys.n)


def state_from_values(sys: CoupledSystem, values: Sequence[float], t: float = 0.0) -> SystemState:
    """Build a state from (q_1..q_N, p_1..p_N), checking the length against the graph."""
    values = np.asarray(values, dtype=float)
    if values.shape != (2 * sys.n,):
        raise DimensionError(f"initial condition has {values.size} values, expected 2N = {2 * sys.n}")
    return SystemState.from_vector(values, t)


def apply_permutation(perm: Sequence[int], s: SystemState) -> SystemState:
    """Relabel nodes: node i moves to perm[i] (0-based)."""
    perm = np.asarray(perm, dtype=int)
    if sorted(perm.tolist()) != list(range(s.n)):
        raise DomainError(f"{perm.tolist()} is not a permutation of 0..{s.n - 1}")
    q = np.empty_like(s.q)
    p = np.empty_like(s.p)
    q[perm] = s.q
    p[perm] = s.p
    return SystemState(q, p, s.t)


def permute_vector(perm: Sequence[int], x: np.ndarray) -> np.ndarray:
    """Apply a node permutation to a flat (q, p) vector."""
    x = np.asarray(x, dtype=float)
    half = x.size // 2
    out = np.empty_like(x)
    perm = np.asarray(perm, dtype=int)
    out[perm] = x[:half]
    out[half + perm] = x[half:]
    return out


def automorphisms(g: Graph) -> List[Tuple[int, ...]]:
    """All node permutations preserving the edge set (brute force, small graphs only)."""
    if g.n > 8:
        raise DomainError("automorphism enumeration is limited to 8 nodes")
    return [perm for perm in itertools.permutations(range(g.n)) if g.is_automorphism(perm)]


def random_state(n: int, rng: np.random.Generator, q_scale: float = 1.0,
                 p_scale: Optional[float] = None) -> SystemState:
    """Uniform random state in [-q_scale, q_scale]^N x [-p_scale, p_scale]^N."""
    p_scale = q_scale if p_scale is None else p_scale
    return SystemState(rng.uniform(-q_scale, q_scale, n), rng.uniform(-p_scale, p_scale, n))
