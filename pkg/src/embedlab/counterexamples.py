"""Metrics whose small subspaces embed well in the plane while the whole space
does not: a K_{3,3} drawing with a collapsed crossing, and a planar graph
with a ladder."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import networkx as nx
import numpy as np
from scipy.sparse.csgraph import shortest_path

from .errors import BadSize, IncompleteEmbedding, NoGapFound, ParameterRangeViolation
from .metric import EuclideanEmbedding, FiniteMetric, distortion_of_map, validate_metric
from .topology import crossing_matrix


@dataclass(frozen=True)
class K33Config:
    c1: float = 0.25  # strip width w = c1 sqrt(eps) / k
    c_sp: float = 1.0  # spacing inside the strip is c_sp / n
    fraction: int = 6  # m = n // fraction points of each crossing edge in the strip
    c_range: float = 0.5  # upper limit k <= c_range sqrt(eps) n
    clearance: float = 10.0  # height of the outer vertices above the strip, in units of w


K33_VERTICES = ("a1", "a2", "a3", "b1", "b2", "b3")
K33_EDGES = tuple(f"{a}{b}" for a in ("a1", "a2", "a3") for b in ("b1", "b2", "b3"))
CROSS_E, CROSS_E2 = "a1b2", "a3b1"


@dataclass(frozen=True, eq=False)
class K33Space:
    """n points on a drawing of K_{3,3}.

    Edges a1b2 and a3b1 run side by side through a horizontal strip of
    height w and cross once in its middle.  Their strip points p_i (on a1b2)
    and q_i (on a3b1) share the abscissae x_i; among themselves they are
    measured as if p_i sat at height w and q_i at height 0 with no crossing.
    All other pairs keep their drawing distance.
    """

    n: int
    k: int
    eps: float
    w: float
    s: float
    drawing: np.ndarray
    p_idx: tuple
    q_idx: tuple
    strip_x: np.ndarray
    metric: FiniteMetric
    edges: dict  # edge name -> point indices from its a-vertex to its b-vertex
    edge_map: tuple  # per point: edge name, or the vertex name for the six vertices
    config: K33Config = field(default_factory=K33Config)

    @property
    def m(self) -> int:
        return len(self.p_idx)

    def sidecar(self) -> dict:
        return {
            "n": self.n, "k": self.k, "eps": self.eps, "w": self.w, "s": self.s,
            "drawing": self.drawing.tolist(), "edge_map": list(self.edge_map),
            "p": list(self.p_idx), "q": list(self.q_idx),
            "edges": {k: list(v) for k, v in self.edges.items()},
            "config": asdict(self.config),
        }


def _polyline_points(corners: np.ndarray, count: int) -> np.ndarray:
    """``count`` points evenly spaced in arc length strictly inside a polyline."""
    seg = np.diff(corners, axis=0)
    lens = np.linalg.norm(seg, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(lens)])
    t = cum[-1] * np.arange(1, count + 1) / (count + 1)
    i = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, len(seg) - 1)
    frac = (t - cum[i]) / lens[i]
    return corners[i] + frac[:, None] * seg[i]


def _arc(center, radius, a0, a1, pieces=48) -> np.ndarray:
    th = np.linspace(a0, a1, pieces + 1)
    return np.column_stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)])


def _apportion(lengths, total: int) -> list[int]:
    """Largest-remainder split of ``total`` proportional to ``lengths``."""
    lengths = np.asarray(lengths, dtype=float)
    raw = total * lengths / lengths.sum()
    base = np.floor(raw).astype(int)
    order = np.argsort(-(raw - base), kind="stable")
    base[order[: total - base.sum()]] += 1
    return base.tolist()


def k33_space(n: int, k: int, eps: float, config: K33Config = K33Config()) -> K33Space:
    if not 0 < eps <= 1:
        raise ParameterRangeViolation(f"eps must lie in (0, 1], got {eps}")
    if not (1 / math.sqrt(eps) <= k <= config.c_range * math.sqrt(eps) * n):
        raise ParameterRangeViolation(
            f"need 1/sqrt(eps) <= k <= {config.c_range} sqrt(eps) n, got k={k}, n={n}")
    m = n // config.fraction
    if m < 4:
        raise ParameterRangeViolation(f"strip holds m = {m} < 4 points; increase n")
    w = config.c1 * math.sqrt(eps) / k
    s = config.c_sp / n
    xs = (np.arange(1, m + 1) - (m + 1) / 2) * s
    half = m // 2  # crossing between strip positions half and half + 1
    hw = xs[-1] + 1.5 * s  # x of the vertices at the strip ends
    hv = max(config.clearance * w, 3 * s)
    # a2 and b3 sit far enough out that the a2b3 arc passes over every other vertex
    outer_r = max(hw + 2.5 * s, 1.25 * math.hypot(hw, hv))
    V = {
        "a2": np.array([outer_r, 0.0]), "b1": np.array([hw, hv]),
        "a1": np.array([-hw, hv]), "b3": np.array([-outer_r, 0.0]),
        "a3": np.array([-hw, -hv]), "b2": np.array([hw, -hv]),
    }
    p_pts = np.column_stack([xs, np.where(np.arange(m) < half, w, 0.0)])
    q_pts = np.column_stack([xs, np.where(np.arange(m) < half, 0.0, w)])

    # free polyline parts receive the points that are not vertices or strip points
    parts = {
        "a2b1": np.array([V["a2"], V["b1"]]),
        "a1b1": np.array([V["a1"], V["b1"]]),
        "a1b3": np.array([V["a1"], V["b3"]]),
        "a3b3": np.array([V["a3"], V["b3"]]),
        "a3b2": np.array([V["a3"], V["b2"]]),
        "a2b2": np.array([V["a2"], V["b2"]]),
        "a2b3": _arc((0.0, 0.0), outer_r, 0.0, math.pi),
        "a1b2:in": np.array([V["a1"], p_pts[0]]),
        "a1b2:out": np.array([p_pts[-1], V["b2"]]),
        "a3b1:in": np.array([V["a3"], q_pts[0]]),
        "a3b1:out": np.array([q_pts[-1], V["b1"]]),
    }
    lengths = [float(np.linalg.norm(np.diff(c, axis=0), axis=1).sum()) for c in parts.values()]
    rest = n - 6 - 2 * m
    if rest < 0:
        raise ParameterRangeViolation("n too small for the strip")
    counts = dict(zip(parts, _apportion(lengths, rest)))

    coords, labels, edge_of = [], [], []

    def add(pt, label, edge):
        coords.append(np.asarray(pt, dtype=float))
        labels.append(label)
        edge_of.append(edge)
        return len(coords) - 1

    vid = {name: add(V[name], name, name) for name in K33_VERTICES}
    edges = {}
    for name in K33_EDGES:
        a, b = name[:2], name[2:]
        seq = [vid[a]]
        if name in (CROSS_E, CROSS_E2):
            letter = "p" if name == CROSS_E else "q"
            strip = p_pts if name == CROSS_E else q_pts
            inner = _polyline_points(parts[name + ":in"], counts[name + ":in"])
            seq += [add(pt, f"{name}:{r}", name) for r, pt in enumerate(inner)]
            seq += [add(pt, f"{letter}{r + 1}", name) for r, pt in enumerate(strip)]
            outer = _polyline_points(parts[name + ":out"], counts[name + ":out"])
            seq += [add(pt, f"{name}:{len(inner) + r}", name) for r, pt in enumerate(outer)]
        else:
            pts = _polyline_points(parts[name], counts[name])
            seq += [add(pt, f"{name}:{r}", name) for r, pt in enumerate(pts)]
        seq.append(vid[b])
        edges[name] = tuple(seq)

    drawing = np.array(coords)
    lab = tuple(labels)
    p_idx = tuple(lab.index(f"p{r + 1}") for r in range(m))
    q_idx = tuple(lab.index(f"q{r + 1}") for r in range(m))
    diff = drawing[:, None] - drawing[None]
    dist = np.sqrt((diff ** 2).sum(-1))
    strip_idx = np.array(p_idx + q_idx)
    flat = np.vstack([np.column_stack([xs, np.full(m, w)]), np.column_stack([xs, np.zeros(m)])])
    dist[np.ix_(strip_idx, strip_idx)] = np.sqrt(((flat[:, None] - flat[None]) ** 2).sum(-1))
    # the flattened strip shortcuts some drawing routes; close under shortest paths
    dist = shortest_path(dist, directed=False)
    metric = FiniteMetric(lab, dist)
    validate_metric(metric)
    return K33Space(n, k, float(eps), w, s, drawing, p_idx, q_idx, xs, metric,
                    edges, tuple(edge_of), config)


def _strip_gap(sp: K33Space, subset) -> tuple[float, int]:
    """Centre of the longest run of strip positions with neither p_i nor q_i chosen."""
    chosen = set(int(i) for i in subset)
    free = [not (sp.p_idx[r] in chosen or sp.q_idx[r] in chosen) for r in range(sp.m)]
    best, best_len, r = None, 0, 0
    while r < sp.m:
        if free[r]:
            start = r
            while r < sp.m and free[r]:
                r += 1
            if r - start > best_len:
                best, best_len = (start, r - 1), r - start
        else:
            r += 1
    if best is None:
        raise NoGapFound("every strip position carries a chosen point")
    return 0.5 * (sp.strip_x[best[0]] + sp.strip_x[best[1]]), best_len


def k33_subspace_embedding(sp: K33Space, subset) -> EuclideanEmbedding:
    """Plane embedding of a subspace that moves the crossing into a strip gap.

    Chosen strip points left of the gap keep the order of the strip's left end
    (p on top); those right of it take the flipped order, so inside the strip
    every p-q pair is again at its measured distance up to a shear.
    """
    subset = [int(i) for i in subset]
    if len(set(subset)) != len(subset):
        raise ValueError("subset has repeated points")
    if len(subset) > sp.k:
        raise ParameterRangeViolation(f"subset of size {len(subset)} exceeds k = {sp.k}")
    coords = sp.drawing[subset].copy()
    pos = {p: r for r, p in enumerate(sp.p_idx)}
    qos = {q: r for r, q in enumerate(sp.q_idx)}
    if any(i in pos or i in qos for i in subset):
        xg, _ = _strip_gap(sp, subset)
        for row, i in enumerate(subset):
            if i in pos:
                r = pos[i]
                coords[row, 1] = sp.w if sp.strip_x[r] < xg else 0.0
            elif i in qos:
                r = qos[i]
                coords[row, 1] = 0.0 if sp.strip_x[r] < xg else sp.w
    return EuclideanEmbedding(coords, sp.metric.subspace(subset))


@dataclass(frozen=True)
class CrossingCertificate:
    L: float
    witness: tuple | None  # ((edge, x, y), (edge', x', y')) of the best crossing
    crossings: int


def _disjoint(e1: str, e2: str) -> bool:
    return e1[:2] != e2[:2] and e1[2:] != e2[2:]


def crossing_certificate(sp: K33Space, e: EuclideanEmbedding, points=None) -> CrossingCertificate:
    """Lower bound on the distortion of ``e`` from crossings of disjoint edges.

    ``points`` lists which points of the space ``e`` embeds (all by default);
    edges are drawn through the embedded points only.  For crossing segments
    f(x)f(y) and f(x')f(y') any u in {x, y}, u' in {x', y'} satisfies
    rho(u, u') <= |f(u) - f(u')| <= dist * (rho(x, y) + rho(x', y')) once f is
    scaled to be noncontracting.
    """
    pts = list(range(sp.n)) if points is None else [int(i) for i in points]
    if e.n != len(pts):
        raise IncompleteEmbedding(f"embedding has {e.n} rows for {len(pts)} points")
    if e.dim != 2:
        raise ValueError("certificate needs a plane embedding")
    row = {p: r for r, p in enumerate(pts)}
    sub = sp.metric.subspace(pts)
    alpha = distortion_of_map(sub, e).alpha
    X = e.coords / alpha
    rho = sp.metric.dist
    chains = {name: [i for i in seq if i in row] for name, seq in sp.edges.items()}
    best, wit, count = 0.0, None, 0
    names = list(chains)
    for u in range(len(names)):
        for v in range(u + 1, len(names)):
            n1, n2 = names[u], names[v]
            c1, c2 = chains[n1], chains[n2]
            if not _disjoint(n1, n2) or len(c1) < 2 or len(c2) < 2:
                continue
            a = X[[row[i] for i in c1]]
            b = X[[row[i] for i in c2]]
            hit = crossing_matrix(a[:-1], a[1:], b[:-1], b[1:])
            for i, j in np.argwhere(hit):
                count += 1
                x, y, x2, y2 = c1[i], c1[i + 1], c2[j], c2[j + 1]
                denom = rho[x, y] + rho[x2, y2]
                num = max(rho[x, x2], rho[x, y2], rho[y, x2], rho[y, y2])
                if num / denom > best:
                    best, wit = num / denom, ((n1, x, y), (n2, x2, y2))
    return CrossingCertificate(float(best), wit, count)


# --- planar graph with a ladder -------------------------------------------

@dataclass(frozen=True, eq=False)
class PlanarLadderSpace:
    """Subdivided K4 (outer triangle A, B, C, centre Z) whose side AB is a ladder.

    The ladder has n + 1 rungs; rails and rungs have weight n^(-1/2).  The
    four short edges tying A and B to the rail ends are weighted by their
    drawn length; all other edges have weight 1.  Each of A, B, C, Z carries a pendant path of sqrt(n) unit edges.
    """

    n: int
    graph: nx.Graph
    pos: dict  # plane drawing of ``graph``
    metric: FiniteMetric
    bottom: tuple  # lower ladder rail, node names left to right
    top: tuple
    pendant: dict  # K4 vertex -> pendant path nodes, nearest first

    def index(self, node: str) -> int:
        return self.metric.index(node)


def _subdivide(g, pos, a, b, name, pieces, weight=1.0):
    prev = a
    for r in range(1, pieces):
        node = f"{name}{r}"
        pos[node] = pos[a] + (pos[b] - pos[a]) * r / pieces
        g.add_edge(prev, node, weight=weight)
        prev = node
    g.add_edge(prev, b, weight=weight)


def drawing_is_plane(g: nx.Graph, pos: dict) -> bool:
    """No two edges of the straight-line drawing meet outside shared endpoints."""
    edges = list(g.edges())
    a0 = np.array([pos[u] for u, _ in edges])
    a1 = np.array([pos[v] for _, v in edges])
    hit = crossing_matrix(a0, a1, a0, a1)
    for i, j in np.argwhere(np.triu(hit, 1)):
        if set(edges[i]) & set(edges[j]):
            # adjacent edges may only share their common endpoint
            u, v = edges[i]
            x, y = edges[j]
            common = (set(edges[i]) & set(edges[j])).pop()
            o1 = pos[v if u == common else u] - pos[common]
            o2 = pos[y if x == common else x] - pos[common]
            cross = o1[0] * o2[1] - o1[1] * o2[0]
            if abs(cross) <= 1e-12 * np.linalg.norm(o1) * np.linalg.norm(o2) and o1 @ o2 > 0:
                return False
            continue
        return False
    return True


def planar_ladder_space(n: int) -> PlanarLadderSpace:
    r = math.isqrt(n)
    if r * r != n or n < 16:
        raise BadSize(f"n must be a perfect square >= 16, got {n}")
    g = nx.Graph()
    pos = {}
    side = float(r)
    thin = 1.0 / r
    # A and B sit just beyond the ladder ends, joined to both rails
    pos["A"] = np.array([-2 * thin, thin / 2])
    pos["B"] = np.array([side + 2 * thin, thin / 2])
    pos["C"] = np.array([side / 2, side * math.sqrt(3) / 2])
    pos["Z"] = np.array([side / 2, side / (2 * math.sqrt(3))])
    bottom = [f"b{i}" for i in range(n + 1)]
    top = [f"t{i}" for i in range(n + 1)]
    for i in range(n + 1):
        x = side * i / n
        pos[bottom[i]] = np.array([x, 0.0])
        pos[top[i]] = np.array([x, thin])
        g.add_edge(bottom[i], top[i], weight=thin)
        if i:
            g.add_edge(bottom[i - 1], bottom[i], weight=thin)
            g.add_edge(top[i - 1], top[i], weight=thin)
    for end, i in (("A", 0), ("B", n)):
        for rail in (bottom, top):
            g.add_edge(end, rail[i], weight=float(np.linalg.norm(pos[end] - pos[rail[i]])))
    for a, b in (("A", "C"), ("B", "C"), ("Z", "A"), ("Z", "B"), ("Z", "C")):
        length = float(np.linalg.norm(pos[b] - pos[a]))
        _subdivide(g, pos, a, b, f"{a}{b}.", max(1, round(length)))
    centroid = pos["Z"]
    pendant = {}
    for v in ("A", "B", "C"):
        d = pos[v] - centroid
        d /= np.linalg.norm(d)
        path = [f"{v}~{j}" for j in range(1, r + 1)]
        prev = v
        for j, node in enumerate(path, start=1):
            pos[node] = pos[v] + j * d
            g.add_edge(prev, node, weight=1.0)
            prev = node
        pendant[v] = tuple(path)
    # the centre's pendant path is drawn folded into the face Z-A-ladder-B
    path = [f"Z~{j}" for j in range(1, r + 1)]
    target = np.array([side / 2, thin + 0.5 * (pos["Z"][1] - thin)])
    prev = "Z"
    for j, node in enumerate(path, start=1):
        pos[node] = pos["Z"] + (target - pos["Z"]) * j / r
        g.add_edge(prev, node, weight=1.0)
        prev = node
    pendant["Z"] = tuple(path)

    planar, _ = nx.check_planarity(g)
    if not planar or not drawing_is_plane(g, pos):
        raise AssertionError("ladder construction is not planar")
    nodes = list(g.nodes())
    w = nx.to_scipy_sparse_array(g, nodelist=nodes, weight="weight")
    dist = shortest_path(w, directed=False)
    metric = FiniteMetric(tuple(nodes), dist)
    return PlanarLadderSpace(n, g, pos, metric, tuple(bottom), tuple(top), pendant)


def ladder_gap(sp: PlanarLadderSpace, subset) -> tuple[int, int]:
    """Longest run of rung indices with neither rail vertex chosen (inclusive bounds)."""
    chosen = {sp.metric.labels[i] for i in subset}
    free = [not (sp.bottom[i] in chosen or sp.top[i] in chosen) for i in range(sp.n + 1)]
    best, r = None, 0
    while r <= sp.n:
        if free[r]:
            start = r
            while r <= sp.n and free[r]:
                r += 1
            if best is None or r - start > best[1] - best[0] + 1:
                best = (start, r - 1)
        else:
            r += 1
    if best is None:
        raise NoGapFound("every rung carries a chosen point")
    return best


def ladder_subset_embedding(sp: PlanarLadderSpace, subset) -> EuclideanEmbedding:
    """Drawing positions, except that the centre's pendant path runs straight
    through the widest ladder gap out to the outer face."""
    subset = [int(i) for i in subset]
    lo, hi = ladder_gap(sp, subset)
    xg = 0.5 * (sp.pos[sp.bottom[lo]][0] + sp.pos[sp.bottom[hi]][0])
    z = sp.pos["Z"]
    d = np.array([xg, 0.0]) - z
    d /= np.linalg.norm(d)
    route = {node: z + j * d for j, node in enumerate(sp.pendant["Z"], start=1)}
    coords = np.array([route.get(lab, sp.pos[lab]) for lab in
                       (sp.metric.labels[i] for i in subset)])
    return EuclideanEmbedding(coords, sp.metric.subspace(subset))
