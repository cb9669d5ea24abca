"""Sphere nets, the L2 product X x V, and the radial lift of a line embedding."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateParameters,
    NegativeLineValue,
    TooLarge,
    UnnormalizedInput,
    UnsupportedDimension,
)
from .metric import (
    AXIOM_RTOL,
    DistortionReport,
    EuclideanEmbedding,
    FiniteMetric,
    aspect_ratio,
    distortion_of_map,
    validate_metric,
)

C_NET = 40.0
DEFAULT_C = 100.0
# largest product for which the full distance matrix is materialized
MAX_DENSE_POINTS = 6000


@dataclass(frozen=True, eq=False)
class SphereNet:
    """An eps-dense subset of the radius-R sphere in R^dim, centred at 0.

    Points are ordered lexicographically by their angles: counter-clockwise
    from the +x axis for dim 2, by (polar, azimuth) for dim 3.
    """

    dim: int
    radius: float
    epsilon: float
    points: np.ndarray

    def __post_init__(self):
        p = np.array(self.points, dtype=float)
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def size_bound(self) -> float:
        return C_NET * (self.radius / self.epsilon) ** (self.dim - 1)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "radius": self.radius,
            "epsilon": self.epsilon,
            "points": self.points.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SphereNet":
        return cls(int(obj["dim"]), float(obj["radius"]), float(obj["epsilon"]),
                   np.asarray(obj["points"], dtype=float))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "SphereNet":
        return cls.from_json(json.loads(Path(path).read_text()))


def _circle_count(radius: float, eps: float) -> int:
    return int(math.ceil(2.0 * math.pi * radius / eps - 1e-9))


def _grid_rings(radius: float, eps: float):
    # angular pitch 3/4 eps/R: nearest ring is within half a pitch in polar
    # angle and half a pitch of arc along the ring, so every sphere point is
    # within 3/4 eps (geodesic, hence chordal) of the grid
    pitch = 0.75 * eps / radius
    n_lat = max(2, int(math.ceil(math.pi / pitch)))
    rings = []
    for j in range(n_lat + 1):
        theta = math.pi * j / n_lat
        count = max(1, int(math.ceil(2.0 * math.pi * math.sin(theta) / pitch - 1e-9)))
        if j in (0, n_lat):
            count = 1
        rings.append((theta, count))
    return rings


def net_size(dim: int, radius: float, eps: float) -> int:
    """Cardinality ``epsilon_dense_sphere(dim, radius, eps)`` would have."""
    if dim == 2:
        return _circle_count(radius, eps)
    if dim == 3:
        return sum(c for _, c in _grid_rings(radius, eps))
    raise UnsupportedDimension(f"dimension {dim} not in (2, 3)")


def epsilon_dense_sphere(dim: int, radius: float, eps: float) -> SphereNet:
    if dim not in (2, 3):
        raise UnsupportedDimension(f"dimension {dim} not in (2, 3)")
    if not (radius > 0 and eps > 0) or eps > 2 * radius:
        raise DegenerateParameters(f"need R > 0 and 0 < eps <= 2R, got R={radius}, eps={eps}")
    if dim == 2:
        n = _circle_count(radius, eps)
        theta = 2.0 * math.pi * np.arange(n) / n
        pts = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    else:
        blocks = []
        for theta, count in _grid_rings(radius, eps):
            phi = 2.0 * math.pi * np.arange(count) / count
            st = math.sin(theta)
            blocks.append(radius * np.column_stack(
                [st * np.cos(phi), st * np.sin(phi), np.full(count, math.cos(theta))]))
        pts = np.vstack(blocks)
    return SphereNet(dim, float(radius), float(eps), pts)


@dataclass(frozen=True)
class ReductionParams:
    C: float
    D_max: float
    Delta: float
    R: float
    epsilon: float
    dim: int = 2

    @property
    def predicted_net_size(self) -> int:
        return net_size(self.dim, self.R, self.epsilon)

    @property
    def net_size_bound(self) -> float:
        return C_NET * (self.R / self.epsilon) ** (self.dim - 1)


def reduction_parameters(x: FiniteMetric, D_max: float, dim: int = 2,
                         C: float = DEFAULT_C) -> ReductionParams:
    """R = C * D_max * Delta(X) and eps = 1 / (C * D_max); X must have min distance 1."""
    if D_max < 1:
        raise DegenerateParameters(f"D_max must be >= 1, got {D_max}")
    if C < 64:
        raise DegenerateParameters(f"C must be >= 64, got {C}")
    if dim not in (2, 3):
        raise UnsupportedDimension(f"dimension {dim} not in (2, 3)")
    if x.n >= 2:
        off = x.dist[~np.eye(x.n, dtype=bool)]
        if abs(off.min() - 1.0) > AXIOM_RTOL * max(off.max(), 1.0):
            raise UnnormalizedInput(f"smallest distance is {off.min()!r}, expected 1")
        delta = aspect_ratio(x)
    else:
        delta = 1.0
    return ReductionParams(float(C), float(D_max), float(delta),
                           C * D_max * delta, 1.0 / (C * D_max), dim)


@dataclass(frozen=True, eq=False)
class ProductSpace:
    """Y = X x_{L2} V with rho_Y((a,v),(b,w)) = sqrt(rho_X(a,b)^2 + |v-w|^2).

    Point ``p`` of Y is the pair ``(p // |V|, p % |V|)``.  The full matrix is
    only built on demand (``metric``); large products are handled through
    ``distances``.
    """

    base: FiniteMetric
    net: SphereNet

    @property
    def size(self) -> int:
        return self.base.n * len(self.net)

    def index(self, a: int, v: int) -> int:
        return a * len(self.net) + v

    def pair(self, p: int) -> tuple[int, int]:
        return divmod(int(p), len(self.net))

    def label(self, p: int) -> str:
        a, v = self.pair(p)
        return f"{self.base.labels[a]}#{v}"

    def layer(self, a: int) -> slice:
        m = len(self.net)
        return slice(a * m, (a + 1) * m)

    def distances(self, p, q) -> np.ndarray:
        """Vectorized rho_Y between index arrays ``p`` and ``q`` (broadcasting)."""
        m = len(self.net)
        p = np.asarray(p)
        q = np.asarray(q)
        a, v = np.divmod(p, m)
        b, w = np.divmod(q, m)
        dv = self.net.points[v] - self.net.points[w]
        return np.sqrt(self.base.dist[a, b] ** 2 + np.einsum("...k,...k->...", dv, dv))

    @cached_property
    def metric(self) -> FiniteMetric:
        if self.size > MAX_DENSE_POINTS:
            raise TooLarge(f"product has {self.size} points; dense matrix capped at {MAX_DENSE_POINTS}")
        idx = np.arange(self.size)
        d = self.distances(idx[:, None], idx[None, :])
        np.fill_diagonal(d, 0.0)
        return FiniteMetric(tuple(self.label(p) for p in idx), d)

    def sidecar(self) -> dict:
        return {
            "base_labels": list(self.base.labels),
            "pairs": [[self.base.labels[a], v] for a, v in map(self.pair, range(self.size))],
            "net": self.net.to_json(),
            "base": self.base.to_json(),
        }

    @classmethod
    def from_sidecar(cls, obj: dict) -> "ProductSpace":
        return cls(FiniteMetric.from_json(obj["base"]), SphereNet.from_json(obj["net"]))


def product_space(x: FiniteMetric, net: SphereNet) -> ProductSpace:
    validate_metric(x)
    if len(net) == 0:
        raise DegenerateParameters("empty net")
    return ProductSpace(x, net)


def reduction_gadget(x: FiniteMetric, D_max: float, dim: int = 2, C: float = DEFAULT_C):
    """Parameters, net and product space for a normalized X."""
    params = reduction_parameters(x, D_max, dim, C)
    net = epsilon_dense_sphere(dim, params.R, params.epsilon)
    return params, product_space(x, net)


def _line_values(f) -> np.ndarray:
    return np.asarray(getattr(f, "positions", f), dtype=float)


def forward_embedding(f, p: ProductSpace) -> EuclideanEmbedding:
    """Place (a, v) on the sphere of radius R + f(a) along the direction of v."""
    vals = _line_values(f)
    if vals.shape != (p.base.n,):
        raise ValueError(f"need one line value per base point, got shape {vals.shape}")
    if abs(vals.min()) > 1e-12 * max(1.0, np.abs(vals).max()):
        raise NegativeLineValue(f"min f = {vals.min()!r}, expected 0")
    R = p.net.radius
    scale = (R + vals) / R
    coords = (scale[:, None, None] * p.net.points[None, :, :]).reshape(-1, p.net.dim)
    source = p.metric if p.size <= MAX_DENSE_POINTS else None
    return EuclideanEmbedding(coords, source)


def forward_distortion(f, p: ProductSpace) -> DistortionReport:
    """Exact distortion of ``forward_embedding(f, p)``.

    On a circle net the forward map commutes with the rotation by one net
    step, so every pair is equivalent to one with first net index 0; this
    scans n^2 |V| pairs instead of (n |V|)^2 / 2.  Dimension 3 falls back to
    the dense computation.
    """
    vals = _line_values(f)
    if p.net.dim != 2:
        return distortion_of_map(p.metric, forward_embedding(f, p))
    R = p.net.radius
    m = len(p.net)
    k = np.arange(m)
    half = np.sin(np.pi * k / m)
    chord_v = 2.0 * R * half
    hi, lo = 0.0, np.inf
    for a in range(p.base.n):
        ra = R + vals[a]
        for b in range(a, p.base.n):
            rb = R + vals[b]
            rho = np.sqrt(p.base.dist[a, b] ** 2 + chord_v ** 2)
            # |ra u - rb w|^2 = (ra - rb)^2 + 4 ra rb sin^2(angle / 2)
            img = np.sqrt((ra - rb) ** 2 + 4.0 * ra * rb * half ** 2)
            if a == b:
                rho, img = rho[1:], img[1:]
            if rho.size == 0:
                continue
            ratio = img / rho
            hi = max(hi, float(ratio.max()))
            lo = min(lo, float(ratio.min()))
    return DistortionReport(hi, 1.0 / lo, hi / lo, lo)
