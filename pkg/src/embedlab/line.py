"""Optimal line embeddings of small metrics and recovery of a line embedding
from a plane embedding of the product X x V."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cmp_to_key
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import NotNested, TooLarge
from .gadget import MAX_DENSE_POINTS, ProductSpace
from .metric import EuclideanEmbedding, FiniteMetric, distortion_of_map

MAX_BRUTEFORCE_N = 10
BISECTION_STEPS = 60


@dataclass(frozen=True, eq=False)
class LineEmbedding:
    """Positions on R^1, one per point; ``ordering`` lists indices left to right."""

    positions: np.ndarray
    distortion: float | None = None
    ordering: tuple = field(default=(), init=False)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float).reshape(-1)
        if pos.size:
            pos = pos - pos.min()
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "ordering", tuple(int(i) for i in np.argsort(pos, kind="stable")))

    @property
    def n(self) -> int:
        return self.positions.size

    def embedding(self, source: FiniteMetric | None = None) -> EuclideanEmbedding:
        return EuclideanEmbedding(self.positions[:, None], source)

    def to_json(self) -> dict:
        out = {"positions": self.positions.tolist()}
        if self.distortion is not None:
            out["distortion"] = self.distortion
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "LineEmbedding":
        return cls(np.asarray(obj["positions"], dtype=float), obj.get("distortion"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "LineEmbedding":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class NestingOrder:
    order: tuple  # layer indices, outermost first
    gaps: tuple  # distance between consecutive layers in ``order``


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    positions: np.ndarray | None = None


def _constraint_weights(d: np.ndarray, ordering, D: float) -> np.ndarray:
    """Edge weights w[u, v] of the difference system x_v - x_u <= w[u, v]."""
    o = np.asarray(ordering, dtype=int)
    r = d[np.ix_(o, o)]
    n = len(o)
    upper = np.triu(np.ones((n, n), dtype=bool), 1)
    w = np.full((n, n), np.inf)
    w[upper] = D * r[upper]  # x_j - x_i <= D rho   (i before j)
    w[upper.T] = -r[upper.T]  # x_i - x_j <= -rho
    return w


def _bellman_ford(w: np.ndarray, tol: float):
    """Shortest distances from a virtual source joined to every node by 0-edges.

    Returns None when a negative cycle (weight below -tol) exists.
    """
    n = w.shape[0]
    dist = np.zeros(n)
    for _ in range(n):
        relaxed = np.minimum(dist, (dist[:, None] + w).min(axis=0))
        if np.all(relaxed >= dist - tol):
            return relaxed
        dist = relaxed
    return None


def order_feasibility(m: FiniteMetric, ordering, D: float) -> Feasibility:
    """Positions increasing along ``ordering`` with rho <= x_j - x_i <= D rho, if any."""
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    ordering = [int(i) for i in ordering]
    if sorted(ordering) != list(range(m.n)):
        raise ValueError("ordering must be a permutation of the point indices")
    if m.n < 2:
        return Feasibility(True, np.zeros(m.n))
    w = _constraint_weights(m.dist, ordering, D)
    tol = 1e-12 * D * float(m.dist.max()) * m.n
    x = _bellman_ford(w, tol)
    if x is None:
        return Feasibility(False)
    pos = np.empty(m.n)
    pos[ordering] = x - x.min()
    return Feasibility(True, pos)


def _prefix_feasible(d: np.ndarray, prefix, D: float, tol: float) -> bool:
    if len(prefix) < 3:
        return True
    return _bellman_ford(_constraint_weights(d, prefix, D), tol) is not None


def _min_feasible_D(m: FiniteMetric, ordering, hi: float) -> float:
    lo = 1.0
    if order_feasibility(m, ordering, lo).feasible:
        return lo
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if order_feasibility(m, ordering, mid).feasible:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-12 * hi:
            break
    return hi


def optimal_line_embedding_bruteforce(m: FiniteMetric) -> LineEmbedding:
    """Minimum-distortion line embedding by enumerating orderings.

    Orderings are visited in lexicographic order (one of each reversal pair);
    prefixes that are already infeasible at the incumbent distortion are
    pruned, which is exact because prefix constraints are a subset of the
    full system.
    """
    n = m.n
    if n > MAX_BRUTEFORCE_N:
        raise TooLarge(f"brute force is limited to {MAX_BRUTEFORCE_N} points, got {n}")
    if n < 2:
        return LineEmbedding(np.zeros(n), 1.0)
    delta = float(m.dist.max() / m.dist[~np.eye(n, dtype=bool)].min())
    best_D = n * delta
    best_order = None
    d = m.dist
    tol = 1e-12 * best_D * float(d.max()) * n

    def search(prefix, remaining):
        nonlocal best_D, best_order
        if not remaining:
            if prefix[0] > prefix[-1]:
                return
            if not order_feasibility(m, prefix, best_D).feasible:
                return
            D = _min_feasible_D(m, prefix, best_D)
            if best_order is None or D < best_D * (1 - 1e-9):
                best_D, best_order = D, list(prefix)
            return
        for i in sorted(remaining):
            nxt = prefix + [i]
            if _prefix_feasible(d, nxt, best_D, tol):
                search(nxt, remaining - {i})

    search([], frozenset(range(n)))
    feas = order_feasibility(m, best_order, best_D)
    return LineEmbedding(feas.positions, best_D)


def line_distortion(m: FiniteMetric, f) -> float:
    pos = np.asarray(getattr(f, "positions", f), dtype=float)
    return distortion_of_map(m, EuclideanEmbedding(pos[:, None], m)).distortion


# --- nesting of layers ----------------------------------------------------

def _lowest_point(pts: np.ndarray) -> np.ndarray:
    """Point with minimum x1, ties broken by x2."""
    x = pts[:, 0]
    cand = np.flatnonzero(x == x.min())
    if pts.shape[1] >= 2 and cand.size > 1:
        cand = cand[np.argmin(pts[cand, 1])]
    return pts[int(np.atleast_1d(cand)[0])]


def _crossing_parity(point: np.ndarray, ring: np.ndarray) -> bool:
    from .topology import point_in_polygon

    return point_in_polygon(point, ring)


def nesting_comparator(layer_a: np.ndarray, layer_b: np.ndarray, index_a: int = 0,
                       index_b: int = 1, check: bool = True) -> int:
    """Return 0 when ``layer_a`` is the outer layer, 1 when ``layer_b`` is.

    The outer layer owns the leftmost point of the union.  In the plane the
    verdict is confirmed by containment of the polylines through the layers
    (taken in net order).
    """
    a = np.asarray(layer_a, dtype=float)
    b = np.asarray(layer_b, dtype=float)
    pa, pb = _lowest_point(a), _lowest_point(b)
    ka = (pa[0], pa[1] if a.shape[1] > 1 else 0.0, index_a)
    kb = (pb[0], pb[1] if b.shape[1] > 1 else 0.0, index_b)
    verdict = 0 if ka < kb else 1
    if check and a.shape[1] == 2:
        outer, inner = (a, b) if verdict == 0 else (b, a)
        p_in = _lowest_point(inner)
        p_out = _lowest_point(outer)
        if not _crossing_parity(p_in, outer) or _crossing_parity(p_out, inner):
            raise NotNested(f"layers {index_a} and {index_b} are not nested")
    return verdict


def _set_distance(a: np.ndarray, b: np.ndarray, a_idx=None) -> float:
    """Smallest distance between two finite point sets."""
    if len(a) > len(b):
        a, b = b, a
    # same-direction pairs give a cheap upper bound that prunes the tree query
    k = min(len(a), len(b))
    bound = float(np.sqrt(((a[:k] - b[:k]) ** 2).sum(axis=1)).min())
    tree = cKDTree(b, balanced_tree=False, compact_nodes=False)
    # only strictly closer pairs can change the answer; misses come back as inf
    dd, _ = tree.query(a, k=1, distance_upper_bound=bound)
    return float(min(bound, dd.min()))


@dataclass(frozen=True)
class Extraction:
    line: LineEmbedding
    nesting: NestingOrder
    scale: float  # factor applied to g to make it noncontracting
    scale_exact: bool
    error_bound: float  # additive error of the finite-set gaps, 2 D eps


def _normalizing_scale(g: EuclideanEmbedding, p: ProductSpace, rng, samples: int):
    """Smallest ratio |g(y) - g(y')| / rho_Y(y, y'); exact for small products."""
    if p.size <= MAX_DENSE_POINTS:
        rep = distortion_of_map(p.metric, g)
        return rep.alpha, rep.expansion / rep.alpha, True
    m = len(p.net)
    n = p.base.n
    idx = []
    # same direction across layers, neighbouring directions within a layer
    v = np.arange(m)
    for a in range(n):
        for b in range(a + 1, n):
            idx.append(np.column_stack([a * m + v, b * m + v]))
        idx.append(np.column_stack([a * m + v, a * m + (v + 1) % m]))
    pa = rng.integers(0, p.size, samples)
    pb = rng.integers(0, p.size, samples)
    keep = pa != pb
    idx.append(np.column_stack([pa[keep], pb[keep]]))
    pairs = np.vstack(idx)
    rho = p.distances(pairs[:, 0], pairs[:, 1])
    img = np.linalg.norm(g.coords[pairs[:, 0]] - g.coords[pairs[:, 1]], axis=1)
    ratio = img / rho
    return float(ratio.min()), float(ratio.max() / ratio.min()), False


def extract_line_embedding(g: EuclideanEmbedding, p: ProductSpace, seed: int = 0,
                           samples: int = 200_000, check: bool = True) -> Extraction:
    """Line embedding of the base read off from the nesting of the layers of g.

    Layers are sorted outermost first; the gap between consecutive layers is
    the distance between their finite images and the innermost layer sits at
    position 0.
    """
    n = p.base.n
    if g.n != p.size:
        raise ValueError(f"embedding has {g.n} points, product has {p.size}")
    if n == 1:
        return Extraction(LineEmbedding(np.zeros(1), 1.0), NestingOrder((0,), ()), 1.0, True, 0.0)
    rng = np.random.default_rng(seed)
    alpha, dist_est, exact = _normalizing_scale(g, p, rng, samples)
    coords = g.coords / alpha
    layers = [coords[p.layer(a)] for a in range(n)]

    def cmp(a, b):
        return -1 if nesting_comparator(layers[a], layers[b], a, b, check) == 0 else 1

    order = sorted(range(n), key=cmp_to_key(cmp))
    gaps = tuple(_set_distance(layers[order[i]], layers[order[i + 1]]) for i in range(n - 1))
    pos = np.zeros(n)
    inner_first = order[::-1]
    pos[inner_first] = np.concatenate([[0.0], np.cumsum(gaps[::-1])])
    line = LineEmbedding(pos, line_distortion(p.base, pos))
    bound = 2.0 * dist_est * p.net.epsilon
    return Extraction(line, NestingOrder(tuple(order), gaps), 1.0 / alpha, exact, bound)
