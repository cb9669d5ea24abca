"""Finite metric spaces, Euclidean embeddings and the distortion of a map.

Distances are float64 throughout.  Metric axioms are checked with an
additive tolerance of ``1e-9 * max(dist)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse.csgraph import csgraph_from_dense, shortest_path
from scipy.spatial.distance import pdist

from .errors import (
    AsymmetricMatrix,
    DisconnectedGraph,
    MetricError,
    NonInjectiveImage,
    NonpositiveOffDiagonal,
    NonzeroDiagonal,
    TooFewPoints,
    TriangleViolation,
)

AXIOM_RTOL = 1e-9
INJECTIVITY_RTOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteMetric:
    """Labelled point set with a full symmetric distance matrix."""

    labels: tuple
    dist: np.ndarray

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        dist = _frozen(self.dist)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
            raise MetricError(f"distance matrix must be square, got shape {dist.shape}")
        if dist.shape[0] != len(labels):
            raise MetricError(f"{len(labels)} labels for a {dist.shape[0]}x{dist.shape[0]} matrix")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "dist", dist)

    @property
    def n(self) -> int:
        return len(self.labels)

    @classmethod
    def from_points(cls, points, labels=None) -> "FiniteMetric":
        """Euclidean metric of a point cloud."""
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        diff = pts[:, None, :] - pts[None, :, :]
        d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        if labels is None:
            labels = [str(i) for i in range(len(pts))]
        return cls(tuple(labels), d)

    def scaled(self, factor: float) -> "FiniteMetric":
        return FiniteMetric(self.labels, self.dist * factor)

    def normalized(self) -> "FiniteMetric":
        """Rescale so that the smallest nonzero distance is 1."""
        if self.n < 2:
            return self
        return self.scaled(1.0 / _offdiag(self.dist).min())

    def subspace(self, idx: Sequence[int]) -> "FiniteMetric":
        idx = np.asarray(idx, dtype=int)
        return FiniteMetric(tuple(self.labels[i] for i in idx), self.dist[np.ix_(idx, idx)])

    def index(self, label) -> int:
        return self.labels.index(str(label))

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "dist": self.dist.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "FiniteMetric":
        return cls(tuple(obj["labels"]), np.asarray(obj["dist"], dtype=float))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> "FiniteMetric":
        return cls.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class EuclideanEmbedding:
    """Coordinates in R^dim for every point of ``source`` (row i <-> label i)."""

    coords: np.ndarray
    source: FiniteMetric | None = None
    dim: int = field(default=0)

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim == 1:
            c = c[:, None]
        if not np.all(np.isfinite(c)):
            raise ValueError("embedding coordinates must be finite")
        if self.source is not None and c.shape[0] != self.source.n:
            raise ValueError(f"{c.shape[0]} coordinate rows for a {self.source.n}-point space")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "dim", c.shape[1])

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    def scaled(self, factor: float) -> "EuclideanEmbedding":
        return EuclideanEmbedding(self.coords * factor, self.source)

    def is_injective(self) -> bool:
        if self.n < 2:
            return True
        d = pdist(self.coords)
        return d.min() > INJECTIVITY_RTOL * d.max()

    def to_json(self) -> dict:
        return {"dim": self.dim, "coords": self.coords.tolist()}

    @classmethod
    def from_json(cls, obj: dict, source: FiniteMetric | None = None) -> "EuclideanEmbedding":
        coords = np.asarray(obj["coords"], dtype=float).reshape(-1, int(obj["dim"]))
        return cls(coords, source)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path, source: FiniteMetric | None = None) -> "EuclideanEmbedding":
        return cls.from_json(json.loads(Path(path).read_text()), source)


@dataclass(frozen=True)
class DistortionReport:
    expansion: float
    contraction: float
    distortion: float
    alpha: float

    def to_json(self) -> dict:
        return {
            "expansion": self.expansion,
            "contraction": self.contraction,
            "distortion": self.distortion,
            "alpha": self.alpha,
        }


def _offdiag(a: np.ndarray) -> np.ndarray:
    return a[~np.eye(a.shape[0], dtype=bool)]


def metric_violation(m: FiniteMetric) -> MetricError | None:
    """Return the first violated axiom as an exception instance, or None."""
    d = m.dist
    n = m.n
    if n == 0:
        return None
    tol = AXIOM_RTOL * max(float(np.abs(d).max()), 1.0)
    diag = np.abs(np.diag(d))
    if np.any(diag > tol):
        i = int(np.argmax(diag > tol))
        return NonzeroDiagonal(f"dist[{i}][{i}] = {d[i, i]!r}")
    asym = np.abs(d - d.T) > tol
    if asym.any():
        i, j = map(int, np.argwhere(asym)[0])
        return AsymmetricMatrix(f"dist[{i}][{j}] = {d[i, j]!r} != dist[{j}][{i}] = {d[j, i]!r}")
    off = ~np.eye(n, dtype=bool)
    bad = off & (d <= 0)
    if bad.any():
        i, j = map(int, np.argwhere(bad)[0])
        return NonpositiveOffDiagonal(f"dist[{i}][{j}] = {d[i, j]!r}")
    for i in range(n):
        # slack[j, k] = d[i, j] + d[j, k] - d[i, k]
        slack = d[i, :, None] + d - d[i, None, :]
        viol = slack < -tol
        if viol.any():
            j, k = map(int, np.argwhere(viol)[0])
            return TriangleViolation(
                i, j, k, f"dist[{i}][{k}] = {d[i, k]!r} > dist[{i}][{j}] + dist[{j}][{k}]"
            )
    return None


def validate_metric(m: FiniteMetric) -> None:
    """Raise the first violated metric axiom; return None when ``m`` is a metric."""
    err = metric_violation(m)
    if err is not None:
        raise err


def aspect_ratio(m: FiniteMetric) -> float:
    if m.n < 2:
        raise TooFewPoints("aspect ratio needs at least two points")
    off = _offdiag(m.dist)
    return float(off.max() / off.min())


def _ratio_extremes(coords: np.ndarray, dist: np.ndarray, block: int = 1024):
    n = coords.shape[0]
    hi, lo = 0.0, np.inf
    img_min, img_max = np.inf, 0.0
    for start in range(0, n - 1, block):
        stop = min(start + block, n - 1)
        rows = np.arange(start, stop)
        diff = coords[rows, None, :] - coords[None, :, :]
        img = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        mask = np.arange(n)[None, :] > rows[:, None]
        e = img[mask]
        r = dist[start:stop][mask]
        img_min = min(img_min, float(e.min()))
        img_max = max(img_max, float(e.max()))
        ratio = e / r
        hi = max(hi, float(ratio.max()))
        lo = min(lo, float(ratio.min()))
    return hi, lo, img_min, img_max


def distortion_of_map(m: FiniteMetric, e: EuclideanEmbedding) -> DistortionReport:
    """Expansion, contraction and distortion of the map label i -> e.coords[i]."""
    if e.n != m.n:
        raise ValueError(f"embedding has {e.n} points, metric has {m.n}")
    if m.n < 2:
        return DistortionReport(1.0, 1.0, 1.0, 1.0)
    hi, lo, img_min, img_max = _ratio_extremes(e.coords, m.dist)
    if not img_min > INJECTIVITY_RTOL * img_max:
        raise NonInjectiveImage(f"two image points at distance {img_min!r}")
    expansion = hi
    contraction = 1.0 / lo
    return DistortionReport(expansion, contraction, expansion * contraction, lo)


def shortest_path_closure(
    labels: Sequence,
    edges: Iterable[tuple],
    base: FiniteMetric | None = None,
) -> FiniteMetric:
    """All-pairs shortest paths over ``base`` (as a complete graph) plus ``edges``.

    ``labels`` lists every node; base labels must appear among them.  Edges
    are ``(u, v, weight)`` triples addressed by label.
    """
    labels = [str(x) for x in labels]
    pos = {lab: i for i, lab in enumerate(labels)}
    if len(pos) != len(labels):
        raise ValueError("duplicate labels")
    n = len(labels)
    g = np.full((n, n), np.inf)
    if base is not None:
        idx = np.array([pos[lab] for lab in base.labels], dtype=int)
        g[np.ix_(idx, idx)] = base.dist
    for u, v, w in edges:
        w = float(w)
        if not w > 0:
            raise ValueError(f"edge ({u}, {v}) has nonpositive weight {w}")
        a, b = pos[str(u)], pos[str(v)]
        if w < g[a, b]:
            g[a, b] = g[b, a] = w
    np.fill_diagonal(g, np.inf)
    graph = csgraph_from_dense(g, null_value=np.inf)
    d = shortest_path(graph, method="auto", directed=False)
    if np.isinf(d).any():
        i, j = map(int, np.argwhere(np.isinf(d))[0])
        raise DisconnectedGraph(f"no path between {labels[i]} and {labels[j]}")
    return FiniteMetric(tuple(labels), d)
