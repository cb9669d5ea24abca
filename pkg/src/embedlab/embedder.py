"""Baseline embedder: Bourgain's random-subset embedding, a Gaussian random
projection to R^d, and a derivative-free local search on the log-ratio spread."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionExceedsAmbient
from .metric import EuclideanEmbedding, FiniteMetric, distortion_of_map


@dataclass(frozen=True)
class BourgainConfig:
    seed: int = 0
    scales: int | None = None  # default ceil(log2 n)
    repetitions: int | None = None  # default ceil(2 log2 n)

    def resolved(self, n: int) -> tuple[int, int]:
        lg = math.log2(max(n, 2))
        q = self.scales or max(1, math.ceil(lg))
        L = self.repetitions or max(1, math.ceil(2 * lg))
        return q, L


@dataclass(frozen=True)
class ProjectionConfig:
    d: int = 2
    trials: int = 20
    seed: int = 0
    orthonormal: bool = False  # orthonormalize the Gaussian matrix


@dataclass(frozen=True)
class LocalSearchConfig:
    iters: int = 4000
    tau_start: float = 0.3  # softmax temperature, decays geometrically
    tau_end: float = 1e-3
    step: float = 0.1  # initial perturbation, relative to the median distance
    seed: int = 0


def bourgain_embed(m: FiniteMetric, cfg: BourgainConfig = BourgainConfig()) -> EuclideanEmbedding:
    """Coordinate (t, l) of x is rho(x, S) for a random S that keeps each point
    with probability 2^-t; empty draws are redrawn."""
    n = m.n
    q, L = cfg.resolved(n)
    rng = np.random.default_rng(cfg.seed)
    cols = []
    for t in range(1, q + 1):
        for _ in range(L):
            mask = rng.random(n) < 2.0 ** -t
            while not mask.any():
                mask = rng.random(n) < 2.0 ** -t
            cols.append(m.dist[:, mask].min(axis=1))
    return EuclideanEmbedding(np.column_stack(cols), m)


def _distortion_or_inf(m: FiniteMetric, coords: np.ndarray) -> float:
    try:
        return distortion_of_map(m, EuclideanEmbedding(coords, m)).distortion
    except Exception:  # collapsed points
        return math.inf


def random_project(e: EuclideanEmbedding, cfg: ProjectionConfig,
                   m: FiniteMetric | None = None) -> EuclideanEmbedding:
    """Best of ``cfg.trials`` Gaussian projections to R^d, judged against the source metric.

    Trial t draws from ``default_rng([seed, t])`` so adding trials never
    changes earlier ones.
    """
    m = m if m is not None else e.source
    if m is None:
        raise ValueError("random_project needs the source metric")
    D = e.dim
    if cfg.d > D:
        raise DimensionExceedsAmbient(f"target dimension {cfg.d} exceeds ambient {D}")
    if e.n < 2:
        return EuclideanEmbedding(np.zeros((e.n, cfg.d)), m)
    best, best_dist = None, math.inf
    for trial in range(cfg.trials):
        rng = np.random.default_rng([cfg.seed, trial])
        g = rng.standard_normal((D, cfg.d)) / math.sqrt(cfg.d)
        if cfg.orthonormal:
            g, _ = np.linalg.qr(g)
        coords = e.coords @ g
        dist = _distortion_or_inf(m, coords)
        if dist < best_dist:
            best, best_dist = coords, dist
    if best is None:
        best = e.coords @ np.random.default_rng([cfg.seed, 0]).standard_normal((D, cfg.d))
    return EuclideanEmbedding(best, m)


def _log_ratios(coords: np.ndarray, rho: np.ndarray, iu) -> np.ndarray:
    diff = coords[iu[0]] - coords[iu[1]]
    with np.errstate(divide="ignore"):
        return np.log(np.sqrt((diff ** 2).sum(axis=1))) - np.log(rho)


def _surrogate(r: np.ndarray, tau: float) -> float:
    # smooth stand-in for max(r) - min(r)
    return tau * (logsumexp(r / tau) + logsumexp(-r / tau))


def refine_local_search(m: FiniteMetric, init: EuclideanEmbedding,
                        cfg: LocalSearchConfig = LocalSearchConfig()) -> EuclideanEmbedding:
    """Move one random point at a time, keeping moves that lower the surrogate.

    The temperature decays geometrically from ``tau_start`` to ``tau_end``.
    The returned embedding is the best iterate by exact distortion, so it is
    never worse than ``init``.
    """
    n = m.n
    if n < 2:
        return EuclideanEmbedding(init.coords, m)
    rng = np.random.default_rng(cfg.seed)
    iu = np.triu_indices(n, 1)
    rho = m.dist[iu]
    # pair positions touching each point
    touch = [np.flatnonzero((iu[0] == i) | (iu[1] == i)) for i in range(n)]
    x = np.array(init.coords, dtype=float)
    r = _log_ratios(x, rho, iu)
    if not np.all(np.isfinite(r)):
        # collapsed start: jitter so every ratio is defined
        x = x + 1e-6 * np.median(m.dist[iu]) * rng.standard_normal(x.shape)
        r = _log_ratios(x, rho, iu)
    best_x = np.array(init.coords, dtype=float)
    best_spread = _distortion_or_inf(m, best_x)
    best_spread = math.log(best_spread) if math.isfinite(best_spread) else math.inf
    spread = float(r.max() - r.min())
    if spread < best_spread:
        best_x, best_spread = x.copy(), spread
    scale = float(np.median(np.sqrt(((x[iu[0]] - x[iu[1]]) ** 2).sum(axis=1))))
    step = cfg.step * scale
    decay = (cfg.tau_end / cfg.tau_start) ** (1.0 / max(cfg.iters - 1, 1))
    tau = cfg.tau_start
    cur = _surrogate(r, tau)
    for it in range(cfg.iters):
        i = int(rng.integers(n))
        prop = x[i] + step * rng.standard_normal(x.shape[1])
        idx = touch[i]
        a, b = iu[0][idx], iu[1][idx]
        other = np.where(a == i, b, a)
        dd = np.sqrt(((x[other] - prop) ** 2).sum(axis=1))
        if np.any(dd <= 0):
            continue
        r_new = r.copy()
        r_new[idx] = np.log(dd) - np.log(rho[idx])
        val = _surrogate(r_new, tau)
        if val < cur:
            x[i] = prop
            r = r_new
            cur = val
            step *= 1.2
            s = float(r.max() - r.min())
            if s < best_spread:
                best_x, best_spread = x.copy(), s
        else:
            step = max(step * 0.98, 1e-9 * scale)
        tau *= decay
        cur = _surrogate(r, tau)
    return EuclideanEmbedding(best_x, m)


def rd_bound(n: int, d: int) -> float:
    """Reference bound n^(2/d) (ln n)^(3/2) used to normalize achieved distortion."""
    return n ** (2.0 / d) * math.log(max(n, 2)) ** 1.5


@dataclass(frozen=True)
class EmbedReport:
    n: int
    d: int
    distortion: float
    bound: float
    c_achieved: float
    seeds: tuple
    per_seed: tuple = field(default=())

    def to_json(self) -> dict:
        return {"n": self.n, "d": self.d, "distortion": self.distortion, "bound": self.bound,
                "c_achieved": self.c_achieved, "seeds": list(self.seeds),
                "per_seed": list(self.per_seed)}


def embed_rd(m: FiniteMetric, d: int, seeds=(0,), trials: int = 20,
             search: LocalSearchConfig | None = None) -> tuple[EuclideanEmbedding, EmbedReport]:
    """Bourgain, then random projection, then local search; best over ``seeds``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    search = search or LocalSearchConfig()
    seeds = tuple(int(s) for s in seeds)
    best, best_dist, per = None, math.inf, []
    for seed in seeds:
        if m.n < 2:
            emb = EuclideanEmbedding(np.zeros((m.n, d)), m)
            dist = 1.0
        else:
            high = bourgain_embed(m, BourgainConfig(seed=seed))
            if high.dim < d:
                high = EuclideanEmbedding(np.pad(high.coords, ((0, 0), (0, d - high.dim))), m)
            low = random_project(high, ProjectionConfig(d=d, trials=trials, seed=seed))
            emb = refine_local_search(m, low, LocalSearchConfig(
                search.iters, search.tau_start, search.tau_end, search.step, seed))
            dist = distortion_of_map(m, emb).distortion
        per.append(dist)
        if dist < best_dist:
            best, best_dist = emb, dist
    bound = rd_bound(m.n, d)
    return best, EmbedReport(m.n, d, best_dist, bound, best_dist / bound, seeds, tuple(per))
