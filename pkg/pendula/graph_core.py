"""
Graph construction, Laplacian spectra, edge-connectivity and anti-synchrony patterns.

Nodes are labelled 1..n everywhere in the public API; numpy arrays are
indexed 0..n-1 internally.
"""
import collections
import itertools
import logging
import math
import os
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from pendula.config import JACOBI_MAX_SWEEPS, JACOBI_TOL, SIGN_SEARCH_MAX_N
from pendula.errors import (
    ConvergenceError,
    DomainError,
    GraphFormatError,
    NotClassConstantError,
    PartitionStructureError,
    SearchIncompleteError,
)

logger = logging.getLogger(__name__)

# Largest block enumerated in one numpy pass during the sign search (3^10 rows)
_SIGN_BLOCK_WIDTH = 10


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on nodes 1..n."""

    n: int
    edges: FrozenSet[Tuple[int, int]]

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise GraphFormatError(f"node count must be an integer >= 1, got {self.n!r}")
        normalized = set()
        for edge in self.edges:
            try:
                i, j = (int(x) for x in edge)
            except (TypeError, ValueError):
                raise GraphFormatError(f"edge {edge!r} is not a node pair")
            if i == j:
                raise GraphFormatError(f"self-loop on node {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise GraphFormatError(f"edge ({i}, {j}) outside nodes 1..{self.n}")
            key = (min(i, j), max(i, j))
            if key in normalized:
                raise GraphFormatError(f"duplicate edge {key}")
            normalized.add(key)
        object.__setattr__(self, 'n', int(self.n))
        object.__setattr__(self, 'edges', frozenset(normalized))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> 'Graph':
        return cls(n, tuple(tuple(e) for e in edges))

    @property
    def edge_list(self) -> List[Tuple[int, int]]:
        """Edges sorted lexicographically."""
        return sorted(self.edges)

    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """0-based endpoint arrays (I, J) with I < J, one entry per edge."""
        pairs = self.edge_list
        if not pairs:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty.copy()
        arr = np.array(pairs, dtype=np.int64) - 1
        return arr[:, 0], arr[:, 1]

    def adjacency(self) -> np.ndarray:
        """Symmetric 0/1 adjacency matrix with zero diagonal."""
        a = np.zeros((self.n, self.n), dtype=np.int64)
        for i, j in self.edges:
            a[i - 1, j - 1] = 1
            a[j - 1, i - 1] = 1
        return a

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def neighbors(self) -> Dict[int, List[int]]:
        """1-based adjacency lists."""
        nbrs = {i: [] for i in range(1, self.n + 1)}
        for i, j in self.edge_list:
            nbrs[i].append(j)
            nbrs[j].append(i)
        return nbrs

    def is_automorphism(self, perm: Sequence[int]) -> bool:
        """True if perm (a 0-based permutation of nodes) preserves the edge set."""
        mapped = {tuple(sorted((perm[i - 1] + 1, perm[j - 1] + 1))) for i, j in self.edges}
        return mapped == set(self.edges)


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(1, n)])


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphFormatError("cycle graphs need at least 3 nodes")
    return Graph.from_edges(n, [(i, i % n + 1) for i in range(1, n + 1)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, itertools.combinations(range(1, n + 1), 2))


def star_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(1, i) for i in range(2, n + 1)])


def random_connected_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    """
    Random connected graph: a random spanning tree plus independent extra edges.

    Args:
        n: Number of nodes
        p: Probability of each non-tree edge
        rng: numpy random generator (seeded by the caller)

    Returns:
        Connected Graph on n nodes
    """
    order = rng.permutation(n) + 1
    edges = set()
    for k in range(1, n):
        parent = int(order[int(rng.integers(k))])
        child = int(order[k])
        edges.add((min(parent, child), max(parent, child)))
    for i, j in itertools.combinations(range(1, n + 1), 2):
        if (i, j) not in edges and rng.random() < p:
            edges.add((i, j))
    return Graph.from_edges(n, edges)


def read_edge_list(path: str) -> Graph:
    """
    Read a graph from a plain-text edge list.

    The first non-comment line is the header ``n <count>``; every following
    line holds one ``i j`` pair with 1-based labels. ``#`` starts a comment.
    """
    try:
        with open(path, 'r', encoding='utf-8') as fh:
            lines = [line.split('#', 1)[0].strip() for line in fh]
    except OSError as e:
        raise GraphFormatError(f"cannot read edge list {path}: {e}")
    lines = [line for line in lines if line]
    if not lines:
        raise GraphFormatError(f"{path}: empty edge list")
    header = lines[0].split()
    if len(header) != 2 or header[0] != 'n':
        raise GraphFormatError(f"{path}: expected header 'n <count>', got {lines[0]!r}")
    try:
        n = int(header[1])
        edges = []
        for line in lines[1:]:
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(line)
            edges.append((int(parts[0]), int(parts[1])))
    except ValueError as e:
        raise GraphFormatError(f"{path}: malformed line {e}")
    return Graph.from_edges(n, edges)


def graph_from_spec(spec: str) -> Graph:
    """
    Build a graph from a generator string or an edge-list path.

    Generators: ``path:N``, ``cycle:N``, ``complete:N``, ``star:N``,
    ``random:N:p:seed``. Anything else is read as an edge-list file.
    """
    generators = {
        'path': path_graph,
        'cycle': cycle_graph,
        'complete': complete_graph,
        'star': star_graph,
    }
    head, _, rest = spec.partition(':')
    if head in generators:
        try:
            n = int(rest)
        except ValueError:
            raise GraphFormatError(f"bad node count in graph spec {spec!r}")
        return generators[head](n)
    if head == 'random':
        try:
            n_s, p_s, seed_s = rest.split(':')
            return random_connected_graph(int(n_s), float(p_s), np.random.default_rng(int(seed_s)))
        except ValueError:
            raise GraphFormatError(f"expected random:N:p:seed, got {spec!r}")
    if os.path.isfile(spec):
        return read_edge_list(spec)
    raise GraphFormatError(f"unknown graph spec {spec!r}")


def is_connected(g: Graph) -> bool:
    nbrs = g.neighbors()
    seen = {1}
    queue = collections.deque([1])
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == g.n


# ---------------------------------------------------------------------------
# Laplacian and spectrum
# ---------------------------------------------------------------------------

def laplacian(g: Graph) -> np.ndarray:
    """Integer graph Laplacian L = D - A."""
    a = g.adjacency()
    return np.diag(a.sum(axis=1)) - a


@dataclass(frozen=True)
class LaplacianSpectrum:
    """Ascending eigenvalues with orthonormal eigenvectors stored as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def nonzero(self, tol: float = 1e-9) -> np.ndarray:
        return self.eigenvalues[self.eigenvalues > tol]

    def clusters(self, tol: float = 1e-9) -> List[Tuple[float, int, np.ndarray]]:
        """
        Group (numerically) equal eigenvalues.

        Returns:
            List of (mean eigenvalue, multiplicity, eigenvector columns)
        """
        groups = []
        start = 0
        vals = self.eigenvalues
        for k in range(1, len(vals) + 1):
            if k == len(vals) or vals[k] - vals[start] > tol:
                groups.append((float(np.mean(vals[start:k])), k - start, self.eigenvectors[:, start:k]))
                start = k
        return groups


def jacobi_eigh(matrix: np.ndarray, tol: float = JACOBI_TOL,
                max_sweeps: int = JACOBI_MAX_SWEEPS) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cyclic Jacobi eigendecomposition of a real symmetric matrix.

    Args:
        matrix: Symmetric (n x n) array
        tol: Threshold on the off-diagonal Frobenius norm, scaled by max(1, ||A||_F)
        max_sweeps: Sweep cap before giving up

    Returns:
        (eigenvalues, eigenvectors) unsorted, eigenvectors as columns

    Raises:
        ConvergenceError: if the off-diagonal norm is still above tol after max_sweeps
    """
    a = np.array(matrix, dtype=float, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))

    def off_norm(m):
        return math.sqrt(max(0.0, float(np.sum(m * m) - np.sum(np.diag(m) ** 2))))

    for sweep in range(max_sweeps):
        if off_norm(a) <= threshold:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vec_p = v[:, p].copy()
                vec_q = v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    if off_norm(a) <= threshold:
        return np.diag(a).copy(), v
    raise ConvergenceError(
        f"Jacobi eigensolver did not converge in {max_sweeps} sweeps "
        f"(off-diagonal norm {off_norm(a):.3e} > {threshold:.3e})"
    )


def spectrum(g: Graph) -> LaplacianSpectrum:
    """
    Full eigendecomposition of the graph Laplacian.

    Returns:
        LaplacianSpectrum with ascending eigenvalues and orthonormal eigenvectors
    """
    lap = laplacian(g).astype(float)
    values, vectors = jacobi_eigh(lap)
    order = np.argsort(values, kind='stable')
    values = values[order]
    vectors = vectors[:, order]
    residual = np.linalg.norm(lap @ vectors - vectors * values, axis=0)
    if residual.size and residual.max() > 1e-9:
        raise ConvergenceError(f"eigenpair residual {residual.max():.3e} exceeds 1e-9")
    return LaplacianSpectrum(eigenvalues=values, eigenvectors=vectors)


def path_spectrum(n: int) -> np.ndarray:
    """Closed-form Laplacian eigenvalues of P_n: 2 - 2 cos(j pi / n), j = 0..n-1."""
    j = np.arange(n)
    return 2.0 - 2.0 * np.cos(j * np.pi / n)


# ---------------------------------------------------------------------------
# Edge connectivity
# ---------------------------------------------------------------------------

def _max_flow(capacity: np.ndarray, nbrs: Dict[int, List[int]], source: int, sink: int) -> int:
    """Edmonds-Karp on a 0-based residual capacity matrix (modified in place)."""
    flow = 0
    n = capacity.shape[0]
    while True:
        parent = [-1] * n
        parent[source] = source
        queue = collections.deque([source])
        while queue and parent[sink] == -1:
            u = queue.popleft()
            for v in nbrs[u]:
                if parent[v] == -1 and capacity[u, v] > 0:
                    parent[v] = u
                    queue.append(v)
        if parent[sink] == -1:
            return flow
        path_flow = math.inf
        v = sink
        while v != source:
            path_flow = min(path_flow, capacity[parent[v], v])
            v = parent[v]
        v = sink
        while v != source:
            u = parent[v]
            capacity[u, v] -= path_flow
            capacity[v, u] += path_flow
            v = u
        flow += int(path_flow)


def edge_connectivity(g: Graph) -> int:
    """
    Minimum number of edges whose removal disconnects g.

    Unit-capacity max-flow from node 1 to every other node, minimised.
    Disconnected graphs (and the single node) give 0.
    """
    if g.n < 2 or not is_connected(g):
        return 0
    adjacency = g.adjacency()
    nbrs = {u: list(np.nonzero(adjacency[u])[0]) for u in range(g.n)}
    best = math.inf
    for sink in range(1, g.n):
        best = min(best, _max_flow(adjacency.copy(), nbrs, 0, sink))
    return int(best)


# ---------------------------------------------------------------------------
# Sign eigenvectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SignVector:
    """Laplacian eigenvector with entries in {-1, 0, 1} and its integer eigenvalue."""

    entries: Tuple[int, ...]
    eigenvalue: int

    @property
    def is_bivalent(self) -> bool:
        return 0 not in self.entries

    @property
    def positive(self) -> FrozenSet[int]:
        return frozenset(i + 1 for i, x in enumerate(self.entries) if x == 1)

    @property
    def negative(self) -> FrozenSet[int]:
        return frozenset(i + 1 for i, x in enumerate(self.entries) if x == -1)

    @property
    def zero(self) -> FrozenSet[int]:
        return frozenset(i + 1 for i, x in enumerate(self.entries) if x == 0)

    def as_array(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)


def _canonical(entries: Sequence[int]) -> Tuple[int, ...]:
    """Flip sign so the first non-zero entry is +1."""
    for x in entries:
        if x != 0:
            return tuple(int(e) * (1 if x > 0 else -1) for e in entries)
    return tuple(int(e) for e in entries)


def sign_vector_from_entries(g: Graph, entries: Sequence[int]) -> SignVector:
    """
    Validate entries as an exact Laplacian eigenvector of g.

    Raises:
        DomainError: wrong length, entries outside {-1,0,1}, zero vector,
            or L v != lambda v for every positive integer lambda
    """
    v = np.array([int(x) for x in entries], dtype=np.int64)
    if v.shape != (g.n,):
        raise DomainError(f"sign vector has length {v.size}, graph has {g.n} nodes")
    if not np.all(np.isin(v, (-1, 0, 1))) or not v.any():
        raise DomainError(f"{tuple(entries)} is not a non-zero {{-1,0,1}} vector")
    image = laplacian(g) @ v
    k = int(np.flatnonzero(v)[0])
    lam = int(image[k] * v[k])
    if lam <= 0 or not np.array_equal(image, lam * v):
        raise DomainError(f"{tuple(entries)} is not a Laplacian eigenvector with positive eigenvalue")
    return SignVector(tuple(int(x) for x in v), lam)


def _exact_eigen_rows(lap: np.ndarray, block: np.ndarray) -> List[SignVector]:
    nonzero = block != 0
    block = block[nonzero.any(axis=1)]
    if not len(block):
        return []
    first = (block != 0).argmax(axis=1)
    rows = np.arange(len(block))
    canonical = block[rows, first] > 0
    block = block[canonical]
    first = first[canonical]
    rows = np.arange(len(block))
    image = block @ lap
    lam = image[rows, first]
    ok = (lam > 0) & np.all(image == lam[:, None] * block, axis=1)
    return [SignVector(tuple(int(x) for x in row), int(l)) for row, l in zip(block[ok], lam[ok])]


def _exhaustive_sign_search(lap: np.ndarray, allow_zero: bool) -> List[SignVector]:
    values = (-1, 0, 1) if allow_zero else (-1, 1)
    n = lap.shape[0]
    width = min(n, _SIGN_BLOCK_WIDTH)
    head = n - width
    tail_block = np.array(list(itertools.product(values, repeat=width)), dtype=np.int64)
    found = []
    for prefix in itertools.product(values, repeat=head):
        prefix_block = np.broadcast_to(np.array(prefix, dtype=np.int64), (len(tail_block), head))
        found.extend(_exact_eigen_rows(lap, np.hstack([prefix_block, tail_block])))
    return found


def _rounded_sign_search(g: Graph, lap: np.ndarray, allow_zero: bool) -> List[SignVector]:
    spec = spectrum(g)
    found = {}
    for value, _, vectors in spec.clusters():
        if value <= 1e-9:
            continue
        for column in vectors.T:
            scaled = column / np.max(np.abs(column))
            for candidate in (np.rint(scaled), np.sign(scaled)):
                candidate = candidate.astype(np.int64)
                if not allow_zero and np.any(candidate == 0):
                    continue
                for sv in _exact_eigen_rows(lap, candidate[None, :]):
                    found[sv.entries] = sv
                for sv in _exact_eigen_rows(lap, -candidate[None, :]):
                    found[sv.entries] = sv
    logger.debug("rounding search on %d nodes found %d sign vectors", g.n, len(found))
    return list(found.values())


def find_sign_eigenvectors(g: Graph, allow_zero: bool = True,
                           allow_rounding: bool = True) -> List[SignVector]:
    """
    All bivalent (and, with allow_zero, trivalent) Laplacian eigenvectors.

    Vectors are exact integer eigenvectors with positive eigenvalue, reported
    once per +/- pair with the first non-zero entry equal to +1.

    Args:
        g: Graph
        allow_zero: Include trivalent vectors (entries in {-1, 0, 1})
        allow_rounding: Above SIGN_SEARCH_MAX_N nodes, round numerical
            eigenvectors instead of enumerating (incomplete search)

    Returns:
        Sign vectors sorted by (eigenvalue, entries)

    Raises:
        SearchIncompleteError: n above the exhaustive cap with rounding disabled
    """
    lap = laplacian(g)
    if g.n <= SIGN_SEARCH_MAX_N:
        vectors = _exhaustive_sign_search(lap, allow_zero)
    elif allow_rounding:
        logger.warning("graph has %d nodes (> %d): sign-vector search uses eigenvector rounding "
                       "and may miss vectors", g.n, SIGN_SEARCH_MAX_N)
        vectors = _rounded_sign_search(g, lap, allow_zero)
    else:
        raise SearchIncompleteError(
            f"exhaustive sign-vector search is capped at {SIGN_SEARCH_MAX_N} nodes (got {g.n})"
        )
    return sorted(vectors, key=lambda sv: (sv.eigenvalue, tuple(-x for x in sv.entries)))


# ---------------------------------------------------------------------------
# Matched partitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MatchedPartition:
    """
    Odd partition of the nodes with a sign-flipping matching.

    classes[k] is a set of 1-based nodes, matching[k] the index of -classes[k],
    signs[k] is 0 for the fixed class W0 and +1/-1 for matched classes.
    """

    classes: Tuple[FrozenSet[int], ...]
    matching: Tuple[int, ...]
    signs: Tuple[int, ...]

    @classmethod
    def from_classes(cls, fixed: Iterable[int],
                     pairs: Sequence[Tuple[Iterable[int], Iterable[int]]]) -> 'MatchedPartition':
        """Build from W0 and a list of (W+, W-) pairs."""
        classes = [frozenset(fixed)]
        matching = [0]
        signs = [0]
        for plus, minus in pairs:
            k = len(classes)
            classes.extend([frozenset(plus), frozenset(minus)])
            matching.extend([k + 1, k])
            signs.extend([1, -1])
        return cls(tuple(classes), tuple(matching), tuple(signs))

    @property
    def fixed_index(self) -> int:
        fixed = [k for k, m in enumerate(self.matching) if m == k]
        if len(fixed) != 1:
            raise PartitionStructureError(f"matching must have exactly one fixed class, found {len(fixed)}")
        return fixed[0]

    def validate(self, n: int) -> None:
        """
        Structural checks against a node count.

        Raises:
            PartitionStructureError: on any violated structural invariant
        """
        count = len(self.classes)
        if count % 2 == 0:
            raise PartitionStructureError(f"matched partitions need an odd class count, got {count}")
        if len(self.matching) != count or len(self.signs) != count:
            raise PartitionStructureError("classes, matching and signs differ in length")
        for k, m in enumerate(self.matching):
            if not 0 <= m < count or self.matching[m] != k:
                raise PartitionStructureError(f"matching is not an involution at class {k}")
        fixed = self.fixed_index
        for k, m in enumerate(self.matching):
            if k == fixed:
                if self.signs[k] != 0:
                    raise PartitionStructureError("the fixed class must carry sign 0")
                continue
            if not self.classes[k]:
                raise PartitionStructureError(f"class {k} is empty but not fixed")
            if self.signs[k] not in (1, -1) or self.signs[k] != -self.signs[m]:
                raise PartitionStructureError(f"classes {k} and {m} must carry opposite signs")
        covered = [node for c in self.classes for node in c]
        if len(covered) != len(set(covered)):
            raise PartitionStructureError("classes are not disjoint")
        if set(covered) != set(range(1, n + 1)):
            missing = sorted(set(range(1, n + 1)) - set(covered))
            extra = sorted(set(covered) - set(range(1, n + 1)))
            raise PartitionStructureError(f"partition does not cover V (missing {missing}, unknown {extra})")

    def labels(self, n: int) -> List[int]:
        """Class index of each node, 0-based list over nodes 1..n."""
        labels = [-1] * n
        for k, c in enumerate(self.classes):
            for node in c:
                labels[node - 1] = k
        return labels

    def describe(self) -> str:
        fixed = self.fixed_index
        parts = [f"W0={sorted(self.classes[fixed])}"]
        letter = 0
        for k, m in enumerate(self.matching):
            if k == fixed or self.signs[k] != 1:
                continue
            tag = chr(ord('a') + letter)
            parts.append(f"W+{tag}={sorted(self.classes[k])}")
            parts.append(f"W-{tag}={sorted(self.classes[m])}")
            letter += 1
        return "{" + ", ".join(parts) + "}"


@dataclass(frozen=True)
class OddBalancedReport:
    """Outcome of verify_odd_balanced; violation is (class index W, node i, node j)."""

    ok: bool
    violation: Optional[Tuple[int, int, int]] = None
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _class_degrees(g: Graph, p: MatchedPartition) -> np.ndarray:
    """D[k, i-1] = number of neighbours of node i inside class k."""
    membership = np.zeros((len(p.classes), g.n), dtype=np.int64)
    for k, c in enumerate(p.classes):
        for node in c:
            membership[k, node - 1] = 1
    return membership @ g.adjacency()


def verify_odd_balanced(g: Graph, p: MatchedPartition) -> OddBalancedReport:
    """
    Check both degree conditions of an odd-balanced matched partition.

    Condition 1: d_W(i) = d_{-W}(j) whenever [i] != W0 and W != [i] = -[j].
    Condition 2: d_W(i) = d_{-W}(i) whenever [i] = W0 != W.

    Raises:
        PartitionStructureError: partition not structurally valid for g
    """
    p.validate(g.n)
    degrees = _class_degrees(g, p)
    labels = p.labels(g.n)
    fixed = p.fixed_index
    for i in range(1, g.n + 1):
        ci = labels[i - 1]
        for w in range(len(p.classes)):
            minus_w = p.matching[w]
            if ci != fixed:
                if w == ci:
                    continue
                for j in sorted(p.classes[p.matching[ci]]):
                    if degrees[w, i - 1] != degrees[minus_w, j - 1]:
                        return OddBalancedReport(
                            False, (w, i, j),
                            f"d_W{w}({i}) = {degrees[w, i - 1]} != d_W{minus_w}({j}) = {degrees[minus_w, j - 1]}",
                        )
            elif w != fixed:
                if degrees[w, i - 1] != degrees[minus_w, i - 1]:
                    return OddBalancedReport(
                        False, (w, i, i),
                        f"d_W{w}({i}) = {degrees[w, i - 1]} != d_W{minus_w}({i}) = {degrees[minus_w, i - 1]}",
                    )
    return OddBalancedReport(True)


def sign_vector_to_partition(v: SignVector) -> MatchedPartition:
    """Partition {W0 = Z, W+ = P, W- = N} of a sign vector."""
    return MatchedPartition.from_classes(v.zero, [(v.positive, v.negative)])


def partition_counts(v: SignVector, g: Graph) -> Tuple[int, int]:
    """
    Class-constant neighbour counts of a sign vector.

    Returns:
        (d_pm, d_0): opposite-sign neighbours and zero neighbours of any
        non-zero node; 2 d_pm + d_0 equals the eigenvalue

    Raises:
        NotClassConstantError: counts differ between non-zero nodes
    """
    nbrs = g.neighbors()
    positive, negative, zero = v.positive, v.negative, v.zero
    opposite_counts = set()
    zero_counts = set()
    for node in positive | negative:
        opposite = negative if node in positive else positive
        opposite_counts.add(sum(1 for u in nbrs[node] if u in opposite))
        zero_counts.add(sum(1 for u in nbrs[node] if u in zero))
    if len(opposite_counts) != 1 or len(zero_counts) != 1:
        raise NotClassConstantError(
            f"neighbour counts of {v.entries} are not class-constant "
            f"(d_pm {sorted(opposite_counts)}, d_0 {sorted(zero_counts)})"
        )
    d_pm = opposite_counts.pop()
    d_0 = zero_counts.pop()
    if 2 * d_pm + d_0 != v.eigenvalue:
        raise NotClassConstantError(
            f"2*{d_pm} + {d_0} != eigenvalue {v.eigenvalue} for {v.entries}"
        )
    return d_pm, d_0


def enumerate_single_letter_partitions(g: Graph, max_n: int = 10) -> List[Tuple[Tuple[int, ...], MatchedPartition]]:
    """
    Brute-force every {W0, W+, W-} matched partition and keep the odd-balanced ones.

    Each partition is reported once per sign flip, keyed by its sign pattern
    with first non-zero entry +1.
    """
    if g.n > max_n:
        raise SearchIncompleteError(f"partition enumeration is capped at {max_n} nodes (got {g.n})")
    found = []
    for pattern in itertools.product((-1, 0, 1), repeat=g.n):
        if 1 not in pattern or -1 not in pattern or _canonical(pattern) != pattern:
            continue
        positive = [i + 1 for i, x in enumerate(pattern) if x == 1]
        negative = [i + 1 for i, x in enumerate(pattern) if x == -1]
        zero = [i + 1 for i, x in enumerate(pattern) if x == 0]
        partition = MatchedPartition.from_classes(zero, [(positive, negative)])
        if verify_odd_balanced(g, partition).ok:
            found.append((pattern, partition))
    return found


# ---------------------------------------------------------------------------
# Anti-synchrony subspaces
# ---------------------------------------------------------------------------

def anti_synchrony_basis(p: MatchedPartition, n: int) -> np.ndarray:
    """
    Orthonormal basis (n x k) of the position part of the anti-synchrony subspace.

    Nodes in the same class move together, matched classes move oppositely,
    W0 nodes stay at zero; one basis column per matched pair.
    """
    p.validate(n)
    columns = []
    for k, m in enumerate(p.matching):
        if k == m or p.signs[k] != 1:
            continue
        column = np.zeros(n)
        column[[node - 1 for node in p.classes[k]]] = 1.0
        column[[node - 1 for node in p.classes[m]]] = -1.0
        columns.append(column / np.linalg.norm(column))
    if not columns:
        return np.zeros((n, 0))
    return np.column_stack(columns)


def subspace_distance(p: MatchedPartition, q: np.ndarray, p_mom: np.ndarray) -> float:
    """Euclidean distance of the phase-space point (q, p) to the anti-synchrony subspace of p."""
    q = np.asarray(q, dtype=float)
    p_mom = np.asarray(p_mom, dtype=float)
    basis = anti_synchrony_basis(p, q.size)
    dq = q - basis @ (basis.T @ q)
    dp = p_mom - basis @ (basis.T @ p_mom)
    return float(math.sqrt(float(dq @ dq + dp @ dp)))
