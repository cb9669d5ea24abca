"""Deterministic SVG figures for curves, plane embeddings and the two
counterexample drawings."""

from __future__ import annotations

import numpy as np

from .errors import UnknownKind

KINDS = ("curves+holes", "embedding2d", "k33-drawing", "ladder-graph")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _f(v: float) -> str:
    return f"{v:.6f}"


class _Canvas:
    def __init__(self, points: np.ndarray):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        span = np.maximum(hi - lo, 1e-9)
        pad = 0.05 * span
        self.lo, self.hi = lo - pad, hi + pad
        self.unit = float(max(self.hi - self.lo)) / 400.0
        self.items: list[str] = []

    def xy(self, p) -> tuple[str, str]:
        # flip y so the figure reads like a math plot
        return _f(p[0]), _f(-p[1])

    def path(self, pts, closed=False, stroke="#000", width=1.0, fill="none", extra=""):
        cmds = []
        for r, p in enumerate(np.asarray(pts, dtype=float)):
            x, y = self.xy(p)
            cmds.append(("M" if r == 0 else "L") + f"{x} {y}")
        if closed:
            cmds.append("Z")
        self.items.append(
            f'<path d="{" ".join(cmds)}" fill="{fill}" stroke="{stroke}" '
            f'stroke-width="{_f(width * self.unit)}"{extra}/>')

    def line(self, p, q, stroke="#000", width=1.0):
        x1, y1 = self.xy(p)
        x2, y2 = self.xy(q)
        self.items.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{stroke}" '
                          f'stroke-width="{_f(width * self.unit)}"/>')

    def circle(self, p, r, fill="#000", opacity=1.0):
        x, y = self.xy(p)
        self.items.append(f'<circle cx="{x}" cy="{y}" r="{_f(r)}" fill="{fill}" '
                          f'fill-opacity="{_f(opacity)}"/>')

    def text(self, p, s, size=10.0):
        x, y = self.xy(p)
        self.items.append(f'<text x="{x}" y="{y}" font-size="{_f(size * self.unit)}">{s}</text>')

    def render(self) -> str:
        x0, y0 = self.lo[0], -self.hi[1]
        w, h = self.hi - self.lo
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" '
                f'viewBox="{_f(x0)} {_f(y0)} {_f(w)} {_f(h)}">')
        return "\n".join([head, *self.items, "</svg>"]) + "\n"


def _curves(obj: dict) -> str:
    from .topology import ClosedPolyline, compute_holes, nesting_order

    curves = [ClosedPolyline(np.asarray(c, dtype=float)) for c in obj["curves"]]
    cv = _Canvas(np.vstack([c.vertices for c in curves]))
    h = obj.get("h")
    for r, c in enumerate(curves):
        for hole in compute_holes(c, h).holes:
            cv.circle(hole.representative_point, hole.inradius_estimate,
                      fill=PALETTE[r % len(PALETTE)], opacity=0.15)
    for r, c in enumerate(curves):
        cv.path(c.vertices, closed=True, stroke=PALETTE[r % len(PALETTE)])
    order = obj.get("order")
    if order is None and len(curves) > 1:
        hh = h or min(c.diameter for c in curves) / 512
        order = nesting_order(curves, hh)
    if order is not None:
        for rank, ci in enumerate(order, start=1):
            v = curves[ci].vertices
            cv.text(v[np.argmax(v[:, 0])], str(rank))
    return cv.render()


def _embedding(obj: dict) -> str:
    pts = np.asarray(obj["coords"], dtype=float).reshape(-1, 2)
    cv = _Canvas(pts)
    for i, j in obj.get("segments", []):
        cv.line(pts[i], pts[j], stroke="#888", width=0.5)
    for p in pts:
        cv.circle(p, 1.5 * cv.unit)
    return cv.render()


def _k33(obj: dict) -> str:
    pts = np.asarray(obj["drawing"], dtype=float)
    cv = _Canvas(pts)
    for r, name in enumerate(sorted(obj["edges"])):
        cv.path(pts[obj["edges"][name]], stroke=PALETTE[r % len(PALETTE)])
    strip = set(obj.get("p", [])) | set(obj.get("q", []))
    for i, p in enumerate(pts):
        cv.circle(p, 1.5 * cv.unit, fill="#d62728" if i in strip else "#000")
    return cv.render()


def _ladder(obj: dict) -> str:
    pos = {k: np.asarray(v, dtype=float) for k, v in obj["pos"].items()}
    cv = _Canvas(np.array([pos[k] for k in sorted(pos)]))
    for u, v, w in obj["edges"]:
        cv.line(pos[u], pos[v], width=0.4 if w < 1 else 1.0, stroke="#555" if w < 1 else "#000")
    return cv.render()


def render_svg(obj: dict, kind: str) -> str:
    if kind == "curves+holes":
        return _curves(obj)
    if kind == "embedding2d":
        return _embedding(obj)
    if kind == "k33-drawing":
        return _k33(obj)
    if kind == "ladder-graph":
        return _ladder(obj)
    raise UnknownKind(f"unknown figure kind {kind!r}; expected one of {', '.join(KINDS)}")
