"""Ordering constraint instances, the punctured-layer reduction space and the
branching graph of 2- and 3-subsets."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import networkx as nx
import numpy as np

from .errors import (
    InconsistentOrdering,
    LociTooCrowded,
    TooLarge,
    TooSmall,
    WrongSemantics,
)
from .gadget import SphereNet, epsilon_dense_sphere
from .metric import EuclideanEmbedding, FiniteMetric, distortion_of_map

BETWEENNESS = "betweenness"
NON_BETWEENNESS = "non-betweenness"
MAX_CONSISTENCY_N = 10


@dataclass(frozen=True)
class BetweennessInstance:
    """Triples (i, j, k) over elements 1..n.

    With betweenness semantics each triple asks for i strictly between j and
    k; with non-betweenness semantics it forbids exactly that.
    """

    n: int
    triples: tuple = ()
    semantics: str = BETWEENNESS

    def __post_init__(self):
        trips = tuple(tuple(int(x) for x in t) for t in self.triples)
        if self.semantics not in (BETWEENNESS, NON_BETWEENNESS):
            raise WrongSemantics(f"unknown semantics {self.semantics!r}")
        for t in trips:
            if len(t) != 3 or len(set(t)) != 3:
                raise ValueError(f"triple {t} must have three distinct entries")
            if not all(1 <= x <= self.n for x in t):
                raise ValueError(f"triple {t} out of range 1..{self.n}")
        object.__setattr__(self, "triples", trips)

    def satisfied_by(self, ordering) -> bool:
        pos = {e: r for r, e in enumerate(ordering)}
        for i, j, k in self.triples:
            between = pos[j] < pos[i] < pos[k] or pos[k] < pos[i] < pos[j]
            if between != (self.semantics == BETWEENNESS):
                return False
        return True

    def to_json(self) -> dict:
        return {"n": self.n, "semantics": self.semantics,
                "triples": [list(t) for t in self.triples]}

    @classmethod
    def from_json(cls, obj: dict) -> "BetweennessInstance":
        return cls(int(obj["n"]), tuple(map(tuple, obj["triples"])), obj["semantics"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "BetweennessInstance":
        return cls.from_json(json.loads(Path(path).read_text()))


FOUR_ELEMENT_TRIPLES = ((3, 1, 2), (4, 1, 2), (4, 1, 3), (2, 3, 4), (1, 3, 4))


def to_non_betweenness(t: BetweennessInstance) -> BetweennessInstance:
    """i between j and k  <=>  j not between i and k, and k not between i and j."""
    if t.semantics != BETWEENNESS:
        raise WrongSemantics("input must use betweenness semantics")
    out = []
    for i, j, k in t.triples:
        out += [(j, i, k), (k, i, j)]
    return BetweennessInstance(t.n, tuple(out), NON_BETWEENNESS)


def consistency_check(t: BetweennessInstance):
    """Lexicographically least ordering satisfying every triple, or None.

    Depth-first over prefixes in increasing element order; a triple is
    checked as soon as its three elements are placed.
    """
    if t.n > MAX_CONSISTENCY_N:
        raise TooLarge(f"exhaustive search limited to n <= {MAX_CONSISTENCY_N}")
    want_between = t.semantics == BETWEENNESS
    by_last: dict[int, list] = {}
    pos = {}

    def ok_when_placing(e):
        for i, j, k in by_last.get(e, ()):
            if all(x in pos for x in (i, j, k)):
                between = pos[j] < pos[i] < pos[k] or pos[k] < pos[i] < pos[j]
                if between != want_between:
                    return False
        return True

    for tri in t.triples:
        for e in tri:
            by_last.setdefault(e, []).append(tri)

    order = []

    def search():
        if len(order) == t.n:
            return True
        for e in range(1, t.n + 1):
            if e in pos:
                continue
            pos[e] = len(order)
            order.append(e)
            if ok_when_placing(e) and search():
                return True
            order.pop()
            del pos[e]
        return False

    return tuple(order) if search() else None


# --- reduction space ------------------------------------------------------

@dataclass(frozen=True)
class Section5Params:
    D: float
    epsilon: float
    R: float
    dim: int
    t: int  # edges per connecting path
    separation: float


@dataclass(frozen=True, eq=False)
class Section5Space:
    """Layers 1..n of a sphere net with punctures, plus one path per triple.

    ``provenance[p]`` is ``("layer", l, u)`` for net point u of layer l or
    ``("path", tau, s)`` for step s of the path of triple tau.
    """

    instance: BetweennessInstance
    params: Section5Params
    net: SphereNet
    loci: tuple  # net index per triple
    space: FiniteMetric
    provenance: tuple
    removed: tuple  # (layer, net index) pairs cut out by punctures
    path_ends: tuple = field(default=())  # (point index of (j, v), point index of (k, v))

    @property
    def size(self) -> int:
        return self.space.n

    def layer_points(self, layer: int) -> np.ndarray:
        """Point indices of a layer, in net order."""
        return np.array([p for p, pr in enumerate(self.provenance)
                         if pr[0] == "layer" and pr[1] == layer], dtype=int)

    def sidecar(self) -> dict:
        return {
            "instance": self.instance.to_json(),
            "params": self.params.__dict__,
            "loci": list(self.loci),
            "provenance": {lab: list(pr) for lab, pr in zip(self.space.labels, self.provenance)},
        }


def _farthest_point_loci(net: SphereNet, count: int, separation: float, rng) -> list[int]:
    if count == 0:
        return []
    pts = net.points
    chosen = [int(rng.integers(len(pts)))]
    dmin = np.linalg.norm(pts - pts[chosen[0]], axis=1)
    for _ in range(count - 1):
        nxt = int(np.argmax(dmin))
        chosen.append(nxt)
        dmin = np.minimum(dmin, np.linalg.norm(pts - pts[nxt], axis=1))
    if count > 1:
        c = pts[chosen]
        gaps = np.linalg.norm(c[:, None] - c[None, :], axis=-1)[~np.eye(count, dtype=bool)]
        if gaps.min() < separation:
            raise LociTooCrowded(
                f"{count} loci reach only separation {gaps.min():.4g} < {separation:.4g}")
    return chosen


def section5_space(t: BetweennessInstance, D: float, d: int = 2, eps: float | None = None,
                   R: float | None = None, separation: float | None = None,
                   seed: int = 0) -> Section5Space:
    if t.semantics != NON_BETWEENNESS:
        raise WrongSemantics("the reduction space is built from a non-betweenness instance")
    n = t.n
    eps = 1.0 / (64 * D) if eps is None else float(eps)
    R = 64.0 * n * D if R is None else float(R)
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    separation = 8 * (1 + D * eps) * D if separation is None else float(separation)
    steps = int(math.floor(1.0 / eps))
    net = epsilon_dense_sphere(d, R, eps)
    rng = np.random.default_rng(seed)
    loci = _farthest_point_loci(net, len(t.triples), separation, rng)

    m = len(net)
    keep = np.ones((n, m), dtype=bool)
    for (i, j, k), v in zip(t.triples, loci):
        near = np.linalg.norm(net.points - net.points[v], axis=1) <= 1.0
        for layer in range(1, n + 1):
            if layer not in (i, j, k):
                keep[layer - 1, near] = False
    lay, u = np.nonzero(keep)
    lay = lay + 1
    n_layer = lay.size
    where = -np.ones((n, m), dtype=int)
    where[lay - 1, u] = np.arange(n_layer)

    pts = net.points[u]
    diff = pts[:, None, :] - pts[None, :, :]
    base = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)) + (lay[:, None] != lay[None, :])
    np.fill_diagonal(base, 0.0)

    ends = [(int(where[j - 1, v]), int(where[k - 1, v])) for (_, j, k), v in zip(t.triples, loci)]
    portals = sorted({p for e in ends for p in e})
    dist_l = base
    if portals:
        kidx = {p: r for r, p in enumerate(portals)}
        dk = base[np.ix_(portals, portals)].copy()
        for a, b in ends:
            dk[kidx[a], kidx[b]] = dk[kidx[b], kidx[a]] = min(dk[kidx[a], kidx[b]], 1.0)
        for r in range(len(portals)):
            dk = np.minimum(dk, dk[:, r:r + 1] + dk[r:r + 1, :])
        bx = base[:, portals]
        # reach[x, b] = shortest route from x that enters the portal graph and leaves at b
        reach = (bx[:, :, None] + dk[None, :, :]).min(axis=1)
        dist_l = base.copy()
        for r in range(len(portals)):
            np.minimum(dist_l, reach[:, r:r + 1] + bx[:, r][None, :], out=dist_l)

    # interior path points: step s of path tau sits s/t from (j, v) and (t - s)/t from (k, v)
    interior = [(tau, s) for tau in range(len(ends)) for s in range(1, steps)]
    total = n_layer + len(interior)
    dist = np.zeros((total, total))
    dist[:n_layer, :n_layer] = dist_l
    if interior:
        tau = np.array([q[0] for q in interior])
        s = np.array([q[1] for q in interior], dtype=float)
        ea = np.array([ends[q][0] for q in tau])
        eb = np.array([ends[q][1] for q in tau])
        oa, ob = s / steps, 1.0 - s / steps
        to_layer = np.minimum(oa[:, None] + dist_l[ea], ob[:, None] + dist_l[eb])
        dist[n_layer:, :n_layer] = to_layer
        dist[:n_layer, n_layer:] = to_layer.T
        pp = np.minimum.reduce([
            oa[:, None] + dist_l[np.ix_(ea, ea)] + oa[None, :],
            oa[:, None] + dist_l[np.ix_(ea, eb)] + ob[None, :],
            ob[:, None] + dist_l[np.ix_(eb, ea)] + oa[None, :],
            ob[:, None] + dist_l[np.ix_(eb, eb)] + ob[None, :],
        ])
        same = tau[:, None] == tau[None, :]
        pp = np.where(same, np.minimum(pp, np.abs(s[:, None] - s[None, :]) / steps), pp)
        np.fill_diagonal(pp, 0.0)
        dist[n_layer:, n_layer:] = pp

    prov = [("layer", int(lay[p]), int(u[p])) for p in range(n_layer)]
    prov += [("path", int(q[0]), int(q[1])) for q in interior]
    labels = [f"{lay[p]}#{u[p]}" for p in range(n_layer)]
    labels += [f"path{q[0]}:{q[1]}" for q in interior]
    removed = tuple((int(a) + 1, int(b)) for a, b in zip(*np.nonzero(~keep)))
    params = Section5Params(float(D), eps, R, d, steps, separation)
    return Section5Space(t, params, net, tuple(loci), FiniteMetric(tuple(labels), dist),
                         tuple(prov), removed, tuple(ends))


def section5_embedding(s: Section5Space, ordering) -> EuclideanEmbedding:
    """Layer at position r of ``ordering`` goes to the sphere of radius R + r;
    path points sit on the radial segment between their end points."""
    ordering = tuple(int(e) for e in ordering)
    if sorted(ordering) != list(range(1, s.instance.n + 1)):
        raise InconsistentOrdering(f"{ordering} is not an ordering of 1..{s.instance.n}")
    if not s.instance.satisfied_by(ordering):
        raise InconsistentOrdering(f"{ordering} violates a triple of the instance")
    rank = {e: r for r, e in enumerate(ordering)}
    R = s.params.R
    coords = np.zeros((s.size, s.net.dim))
    steps = s.params.t
    for p, pr in enumerate(s.provenance):
        if pr[0] == "layer":
            coords[p] = (R + rank[pr[1]]) / R * s.net.points[pr[2]]
    for p, pr in enumerate(s.provenance):
        if pr[0] == "path":
            a, b = s.path_ends[pr[1]]
            coords[p] = coords[a] + (pr[2] / steps) * (coords[b] - coords[a])
    return EuclideanEmbedding(coords, s.space)


def section5_report(s: Section5Space, e: EuclideanEmbedding) -> dict:
    rep = distortion_of_map(s.space, e)
    return {"distortion": rep.distortion, "kappa": rep.distortion / s.instance.n,
            "size": s.size, **{k: v for k, v in rep.to_json().items() if k != "distortion"}}


def recover_ordering(s: Section5Space, e: EuclideanEmbedding, h: float | None = None) -> tuple:
    """Read an ordering of 1..n off the nesting of the layer curves, innermost first."""
    from scipy.spatial import cKDTree

    from .topology import ClosedPolyline, nesting_order

    if s.net.dim != 2:
        raise ValueError("ordering recovery runs in the plane")
    n = s.instance.n
    curves = [ClosedPolyline(e.coords[s.layer_points(layer)]) for layer in range(1, n + 1)]
    if h is None:
        gap = min(
            float(cKDTree(curves[a].vertices).query(curves[b].vertices)[0].min())
            for a in range(n) for b in range(a + 1, n)
        ) if n > 1 else 1.0
        h = min(gap / 4, max(c.diameter for c in curves) / 512)
    order = nesting_order(curves, h)
    return tuple(int(i) + 1 for i in order[::-1])


# --- branching graph ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BranchingGraph:
    n: int
    graph: nx.Graph
    subgraphs: dict  # i -> induced subgraph on subsets containing i

    def triple_vertex(self, i: int, j: int, k: int) -> frozenset:
        v = frozenset((i, j, k))
        if v not in self.graph:
            raise KeyError(v)
        return v

    def membership(self, v) -> int:
        return sum(v in g for g in self.subgraphs.values())


def branching_graph_violations(b: BranchingGraph) -> list[str]:
    out = []
    for i, gi in b.subgraphs.items():
        if not nx.is_connected(gi):
            out.append(f"G_{i} disconnected")
    for i, j in itertools.combinations(sorted(b.subgraphs), 2):
        common = [v for v in b.subgraphs[i] if v in b.subgraphs[j]]
        if not common or not nx.is_connected(b.graph.subgraph(common)):
            out.append(f"G_{i} and G_{j} meet in a disconnected set")
    for v in b.graph:
        if b.membership(v) > 3:
            out.append(f"{sorted(v)} lies in more than 3 subgraphs")
    for tri in itertools.combinations(range(1, b.n + 1), 3):
        if frozenset(tri) not in b.graph:
            out.append(f"no vertex for {tri}")
    return out


def branching_graph(n: int) -> BranchingGraph:
    """Vertices are the 2- and 3-subsets of 1..n; each pair joins the triples containing it."""
    if n < 3:
        raise TooSmall(f"need n >= 3, got {n}")
    g = nx.Graph()
    elems = range(1, n + 1)
    pairs = [frozenset(c) for c in itertools.combinations(elems, 2)]
    triples = [frozenset(c) for c in itertools.combinations(elems, 3)]
    g.add_nodes_from(pairs)
    g.add_nodes_from(triples)
    for tri in triples:
        for pair in itertools.combinations(sorted(tri), 2):
            g.add_edge(frozenset(pair), tri)
    subs = {i: g.subgraph([v for v in g if i in v]).copy() for i in elems}
    b = BranchingGraph(n, g, subs)
    bad = branching_graph_violations(b)
    if bad:
        raise AssertionError("; ".join(bad))
    return b
