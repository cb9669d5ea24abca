"""Closed curves in the plane: PL extension of circle maps, holes, nesting."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import CurvesIntersect, DegenerateCurve, NotTotallyOrdered
from .gadget import SphereNet

MAX_GRID_CELLS = 60_000_000


@dataclass(frozen=True, eq=False)
class ClosedPolyline:
    vertices: np.ndarray
    parameter_net: SphereNet | None = None
    lipschitz: float | None = None  # per-edge speed w.r.t. arc length of the net

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValueError(f"vertices must be an (N, 2) array, got shape {v.shape}")
        if v.shape[0] < 3:
            raise DegenerateCurve("a closed polyline needs at least 3 vertices")
        if np.any(np.all(v == np.roll(v, -1, axis=0), axis=1)):
            raise DegenerateCurve("consecutive duplicate vertices")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    @property
    def diameter(self) -> float:
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def evaluate(self, theta: np.ndarray) -> np.ndarray:
        """Points of the PL extension at net angles ``theta`` (needs a parameter net)."""
        if self.parameter_net is None:
            raise ValueError("curve has no parameter net")
        m = self.vertices.shape[0]
        t = np.mod(np.asarray(theta, dtype=float), 2 * np.pi) * m / (2 * np.pi)
        i = np.floor(t).astype(int) % m
        s = (t - np.floor(t))[..., None]
        return (1 - s) * self.vertices[i] + s * self.vertices[(i + 1) % m]

    def to_json(self) -> dict:
        return {"vertices": self.vertices.tolist()}


def pl_extension(net: SphereNet, images) -> ClosedPolyline:
    """Polyline through the images of a circle net, in the net's angular order."""
    if net.dim != 2:
        raise ValueError("PL extension is only defined for circle nets")
    img = np.asarray(images, dtype=float)
    if img.shape != net.points.shape:
        raise ValueError(f"need one image per net point, got shape {img.shape}")
    nxt = np.roll(img, -1, axis=0)
    m = len(net)
    arc = 2 * np.pi * net.radius / m
    speed = float(np.linalg.norm(nxt - img, axis=1).max() / arc)
    return ClosedPolyline(img, net, speed)


def discrete_lipschitz(net: SphereNet, images) -> float:
    """max |g(v) - g(w)| / |v - w| over distinct net points."""
    from scipy.spatial.distance import pdist

    return float((pdist(np.asarray(images, dtype=float)) / pdist(net.points)).max())


# --- point in polygon -----------------------------------------------------

def winding_number(point, ring: np.ndarray) -> int:
    """Signed number of turns of ``ring`` around ``point`` (upward/downward crossings)."""
    px, py = float(point[0]), float(point[1])
    a = np.asarray(ring, dtype=float)
    b = np.roll(a, -1, axis=0)
    cross = (b[:, 0] - a[:, 0]) * (py - a[:, 1]) - (px - a[:, 0]) * (b[:, 1] - a[:, 1])
    up = (a[:, 1] <= py) & (b[:, 1] > py) & (cross > 0)
    down = (a[:, 1] > py) & (b[:, 1] <= py) & (cross < 0)
    return int(up.sum() - down.sum())


def point_in_polygon(point, ring: np.ndarray) -> bool:
    """Even-odd rule on crossings of the ray to +x.

    Vertices on the ray are treated as lying just above it (half-open edge
    rule), which resolves vertex-through-ray ties consistently.
    """
    px, py = float(point[0]), float(point[1])
    a = np.asarray(ring, dtype=float)
    b = np.roll(a, -1, axis=0)
    straddle = (a[:, 1] > py) != (b[:, 1] > py)
    if not straddle.any():
        return False
    a, b = a[straddle], b[straddle]
    x_at = a[:, 0] + (py - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
    return bool(np.count_nonzero(x_at > px) % 2)


# --- rasterization --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Raster:
    origin: np.ndarray  # lower-left corner of cell (0, 0)
    h: float
    boundary: np.ndarray  # bool grid, True on cells met by the curve
    labels: np.ndarray  # 4-connected components of the free cells
    unbounded: int

    def cell_of(self, pts) -> tuple[np.ndarray, np.ndarray]:
        ij = np.floor((np.atleast_2d(pts) - self.origin) / self.h).astype(int)
        return ij[:, 0], ij[:, 1]

    def center(self, i, j) -> np.ndarray:
        return self.origin + (np.array([i, j], dtype=float) + 0.5) * self.h

    def inside(self, pts) -> np.ndarray:
        """Per point: 1 in a hole, 0 in the unbounded component, -1 on the boundary."""
        i, j = self.cell_of(pts)
        ok = (i >= 0) & (j >= 0) & (i < self.labels.shape[0]) & (j < self.labels.shape[1])
        out = np.zeros(len(i), dtype=int)
        ii, jj = i[ok], j[ok]
        lab = self.labels[ii, jj]
        res = np.where(self.boundary[ii, jj], -1, np.where(lab == self.unbounded, 0, 1))
        out[ok] = res
        return out


def rasterize(curve: ClosedPolyline, h: float, pad: int = 2) -> Raster:
    if not h > 0:
        raise ValueError(f"grid pitch must be positive, got {h}")
    v = curve.vertices
    lo, hi = v.min(axis=0), v.max(axis=0)
    if np.all(hi - lo < h):
        raise DegenerateCurve("curve fits inside a single grid cell")
    origin = lo - pad * h
    shape = tuple(int(s) for s in np.floor((hi - origin) / h).astype(int) + pad + 1)
    if shape[0] * shape[1] > MAX_GRID_CELLS:
        raise ValueError(f"grid {shape} too large; increase h")
    boundary = np.zeros(shape, dtype=bool)
    a, b = curve.segments
    length = np.linalg.norm(b - a, axis=1)
    # sample every segment at spacing <= h/4 so consecutive marks are 8-adjacent
    steps = np.maximum(1, np.ceil(4 * length / h).astype(int))
    seg = np.repeat(np.arange(len(a)), steps + 1)
    offs = np.arange(seg.size) - np.repeat(np.cumsum(steps + 1) - (steps + 1), steps + 1)
    t = offs / np.repeat(steps, steps + 1)
    pts = a[seg] + t[:, None] * (b[seg] - a[seg])
    ij = np.floor((pts - origin) / h).astype(int)
    boundary[ij[:, 0], ij[:, 1]] = True
    labels, _ = ndimage.label(~boundary)  # default structure is 4-connected
    return Raster(origin, float(h), boundary, labels, int(labels[0, 0]))


@dataclass(frozen=True)
class Hole:
    cell_count: int
    inradius_estimate: float
    representative_point: tuple


@dataclass(frozen=True)
class HoleReport:
    grid_pitch: float
    holes: tuple
    unbounded_component_id: int

    def to_json(self) -> dict:
        return {
            "grid_pitch": self.grid_pitch,
            "unbounded_component_id": self.unbounded_component_id,
            "holes": [
                {"cell_count": hl.cell_count, "inradius_estimate": hl.inradius_estimate,
                 "representative_point": list(hl.representative_point)}
                for hl in self.holes
            ],
        }


def compute_holes(curve: ClosedPolyline, h: float | None = None) -> HoleReport:
    """Bounded components of the complement of the curve, on a grid of pitch h.

    The inradius of a hole is the largest distance from a hole cell centre
    to the nearest boundary cell centre; both snaps cost at most h/sqrt(2).
    """
    if h is None:
        h = curve.diameter / 512
    r = rasterize(curve, h)
    edt = ndimage.distance_transform_edt(~r.boundary) * h
    holes = []
    ids = [k for k in range(1, int(r.labels.max()) + 1) if k != r.unbounded]
    if ids:
        top = int(r.labels.max())
        counts = np.bincount(r.labels.ravel(), minlength=top + 1)
        peak = np.zeros(top + 1)
        np.maximum.at(peak, r.labels.ravel(), edt.ravel())
        # first cell (row-major) attaining each hole's peak
        flat = np.flatnonzero((edt == peak[r.labels]) & (r.labels != r.unbounded) & (r.labels > 0))
        lab, first = np.unique(r.labels.ravel()[flat], return_index=True)
        where = dict(zip(lab.tolist(), flat[first].tolist()))
        for k in ids:
            pos = np.unravel_index(where[k], edt.shape)
            rep = r.center(*pos)
            holes.append(Hole(int(counts[k]), float(edt[pos]), (float(rep[0]), float(rep[1]))))
    holes.sort(key=lambda hl: -hl.inradius_estimate)
    return HoleReport(float(h), tuple(holes), r.unbounded)


# --- nesting --------------------------------------------------------------

def crossing_matrix(a0, a1, b0, b1) -> np.ndarray:
    """M[i, j] = closed segment a0[i]a1[i] meets closed segment b0[j]b1[j]."""
    def orient(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - \
               (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])

    a0, a1 = np.asarray(a0, float)[:, None, :], np.asarray(a1, float)[:, None, :]
    b0, b1 = np.asarray(b0, float)[None, :, :], np.asarray(b1, float)[None, :, :]
    # orientations within rounding noise of zero count as collinear
    tol = 1e-12 * np.linalg.norm(a1 - a0, axis=-1) * np.linalg.norm(b1 - b0, axis=-1)
    d1, d2 = orient(b0, b1, a0), orient(b0, b1, a1)
    d3, d4 = orient(a0, a1, b0), orient(a0, a1, b1)
    d1, d2, d3, d4 = (np.where(np.abs(d) <= tol, 0.0, d) for d in (d1, d2, d3, d4))
    hit = (d1 * d2 <= 0) & (d3 * d4 <= 0)
    # collinear disjoint pairs also pass the orientation test; require box overlap
    coll = (d1 == 0) & (d2 == 0)
    if coll.any():
        lo_a, hi_a = np.minimum(a0, a1), np.maximum(a0, a1)
        lo_b, hi_b = np.minimum(b0, b1), np.maximum(b0, b1)
        overlap = np.all((lo_a <= hi_b) & (lo_b <= hi_a), axis=-1)
        hit = hit & (~coll | overlap)
    return hit


def _segments_cross(a0, a1, b0, b1) -> bool:
    return bool(crossing_matrix(a0, a1, b0, b1).any())


def curves_intersect(c1: ClosedPolyline, c2: ClosedPolyline, block: int = 512) -> bool:
    a0, a1 = c1.segments
    b0, b1 = c2.segments
    # only segments whose bounding boxes are within reach can cross
    reach = max(np.linalg.norm(a1 - a0, axis=1).max(), np.linalg.norm(b1 - b0, axis=1).max())
    tree = cKDTree(c2.vertices)
    near = tree.query_ball_point(c1.vertices, r=reach)
    cand_a = [i for i, lst in enumerate(near) if lst]
    if not cand_a:
        return False
    m = len(b0)
    for i in cand_a:
        js = np.unique(np.concatenate([np.asarray(near[i]), (np.asarray(near[i]) - 1) % m]))
        ii = np.array([i, (i - 1) % len(a0)])
        if _segments_cross(a0[ii], a1[ii], b0[js], b1[js]):
            return True
    return False


def _vertex_gap(c1: ClosedPolyline, c2: ClosedPolyline) -> float:
    tree = cKDTree(c2.vertices, balanced_tree=False, compact_nodes=False)
    a = c1.vertices
    # an evenly strided sample gives an upper bound that prunes the full query
    bound = float(tree.query(a[:: max(1, len(a) // 1024)], k=1)[0].min())
    d, _ = tree.query(a, k=1, distance_upper_bound=bound)
    return float(min(bound, d.min()))


def _max_segment(c: ClosedPolyline) -> float:
    a, b = c.segments
    return float(np.linalg.norm(b - a, axis=1).max())


def containment_matrix(curves) -> np.ndarray:
    """C[i, j] = curve i contains the first vertex of curve j (even-odd rule)."""
    n = len(curves)
    c = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            if i != j:
                c[i, j] = point_in_polygon(curves[j].vertices[0], curves[i].vertices)
    return c


def flood_containment_matrix(curves, h: float) -> np.ndarray:
    """Same relation as ``containment_matrix`` decided by flood fill on a grid.

    For each pair the first vertex of curve j not on a boundary cell of
    curve i is used; entries with no such vertex are -1.
    """
    n = len(curves)
    c = np.zeros((n, n), dtype=int)
    for i in range(n):
        r = rasterize(curves[i], h)
        for j in range(n):
            if i == j:
                continue
            status = r.inside(curves[j].vertices)
            good = np.flatnonzero(status >= 0)
            c[i, j] = status[good[0]] if good.size else -1
    return c


@dataclass(frozen=True)
class NestingResult:
    order: tuple  # outermost first
    containment: np.ndarray = field(repr=False)
    flood_agrees: bool = True


def nesting(curves, h: float, cross_check: bool = True) -> NestingResult:
    curves = list(curves)
    n = len(curves)
    if n < 2:
        return NestingResult(tuple(range(n)), np.zeros((n, n), dtype=bool))
    cont = containment_matrix(curves)
    for i in range(n):
        for j in range(i + 1, n):
            if cont[i, j] == cont[j, i]:
                raise NotTotallyOrdered(
                    f"curves {i} and {j}: containment {bool(cont[i, j])} both ways")
    # outer curves contain more of the others
    order = tuple(int(i) for i in np.argsort(-cont.sum(axis=1), kind="stable"))
    rank = np.empty(n, dtype=int)
    rank[list(order)] = np.arange(n)
    if not np.array_equal(cont, rank[:, None] < rank[None, :]):
        raise NotTotallyOrdered("containment relation is not transitive")
    # nested curves can only meet if consecutive ones do
    for i, j in zip(order, order[1:]):
        gap = _vertex_gap(curves[i], curves[j])
        if gap <= 2 * h:
            raise CurvesIntersect(f"curves {i} and {j} come within {gap:.3g} <= 2h")
        if gap <= max(_max_segment(curves[i]), _max_segment(curves[j])):
            if curves_intersect(curves[i], curves[j]):
                raise CurvesIntersect(f"curves {i} and {j} cross")
    agrees = True
    if cross_check:
        flood = flood_containment_matrix(curves, h)
        off = ~np.eye(n, dtype=bool)
        agrees = bool(np.all(flood[off] == cont[off].astype(int)))
        if not agrees:
            raise NotTotallyOrdered("winding and flood-fill containment disagree")
    return NestingResult(order, cont, agrees)


def nesting_order(curves, h: float, cross_check: bool = True) -> tuple:
    """Permutation of ``curves``, outermost first."""
    return nesting(curves, h, cross_check).order


# --- checks from the nesting argument -------------------------------------

@dataclass(frozen=True)
class SlackResult:
    passed: bool
    worst: float
    witness: tuple  # parameter angles of the worst pair
    chord_error: float = 0.0  # allowance for the PL domain cutting across the circle


def slack_check(net: SphereNet, images, delta: float, samples: int = 20000,
                seed: int = 0) -> SlackResult:
    """Check |g(x) - g(y)| >= |x - y| - delta on random pairs of the PL extension.

    Even the identity loses up to twice the sagitta R (1 - cos(pi / m)) of
    the net polygon, so that much is allowed on top of ``delta``.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    curve = pl_extension(net, images)
    rng = np.random.default_rng(seed)
    th = rng.uniform(0, 2 * np.pi, size=(samples, 2))
    gx, gy = curve.evaluate(th[:, 0]), curve.evaluate(th[:, 1])
    R = net.radius
    dom = 2 * R * np.abs(np.sin((th[:, 0] - th[:, 1]) / 2))
    slack = np.linalg.norm(gx - gy, axis=1) - dom
    k = int(np.argmin(slack))
    worst = float(slack[k])
    chord = 2 * R * (1 - np.cos(np.pi / len(net)))
    return SlackResult(bool(worst >= -delta - chord), worst, (float(th[k, 0]), float(th[k, 1])),
                       float(chord))


def narrow_holes_check(curve: ClosedPolyline, D: float, delta: float, h: float | None = None) -> bool:
    """At most one hole has inradius >= 4 D delta + 2h."""
    report = compute_holes(curve, h)
    thresh = 4 * D * delta + 2 * report.grid_pitch
    return sum(hl.inradius_estimate >= thresh for hl in report.holes) <= 1


def hole_report_json(report: HoleReport) -> str:
    return json.dumps(report.to_json())
