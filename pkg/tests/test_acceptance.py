"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line."""

import itertools
import math
import time

import numpy as np
import pytest
from oracles import (connected, lp_line_distortion, random_metric, two_pass_distortion,
                     winding_containment)

from embedlab.counterexamples import crossing_certificate, k33_space, k33_subspace_embedding
from embedlab.embedder import embed_rd, rd_bound
from embedlab.gadget import epsilon_dense_sphere, forward_embedding, reduction_gadget
from embedlab.line import extract_line_embedding, optimal_line_embedding_bruteforce
from embedlab.metric import FiniteMetric, distortion_of_map
from embedlab.reductions import (FOUR_ELEMENT_TRIPLES, NON_BETWEENNESS, BetweennessInstance,
                                 branching_graph, consistency_check, recover_ordering,
                                 section5_embedding, section5_report, section5_space,
                                 to_non_betweenness)
from embedlab.topology import (ClosedPolyline, compute_holes, flood_containment_matrix,
                               nesting, pl_extension, slack_check)

# every distortion computed in this file is also recomputed by the two-pass oracle
ORACLE_LOG = []


def checked_distortion(m: FiniteMetric, coords) -> float:
    e_coords = np.asarray(coords, dtype=float).reshape(m.n, -1)
    from embedlab.metric import EuclideanEmbedding

    ours = distortion_of_map(m, EuclideanEmbedding(e_coords, m)).distortion
    ORACLE_LOG.append(abs(ours - two_pass_distortion(m.dist, e_coords)) / ours)
    return ours


def _metric(seed: int) -> FiniteMetric:
    n = 3 + seed % 3
    d = random_metric(1000 + seed, n)
    return FiniteMetric(tuple(str(i) for i in range(n)), d)


# --- criteria 1 and 3 share the forward embeddings -------------------------

@pytest.fixture(scope="module")
def round_trips():
    rows, c1_time, flood_ok = [], 0.0, []
    for seed in range(50):
        t0 = time.perf_counter()
        x = _metric(seed)
        f = optimal_line_embedding_bruteforce(x)
        _, p = reduction_gadget(x, 1.0, 2, 100)
        g = forward_embedding(f.positions, p)
        ex = extract_line_embedding(g, p, seed=seed)
        c1_time += time.perf_counter() - t0
        opt = tuple(int(i) for i in f.ordering)
        got = tuple(int(i) for i in ex.line.ordering)
        # curves through each layer, for the nesting check
        curves = [ClosedPolyline(g.coords[p.layer(a)]) for a in range(x.n)]
        try:
            res = nesting(curves, h=0.25)
            order, err = res.order, None
            flood_ok.append(res.flood_agrees)
        except Exception as exc:  # recorded as a failure below
            order, err = None, repr(exc)
        rows.append(dict(n=x.n, opt=opt, got=got, ratio=ex.line.distortion / f.distortion,
                         f=f.positions, order=order, err=err))
    return rows, c1_time, flood_ok


def test_c1_round_trip(round_trips, acceptance_record):
    rows, elapsed, _ = round_trips
    match = sum(r["got"] in (r["opt"], r["opt"][::-1]) for r in rows)
    worst = max(r["ratio"] for r in rows)
    ok = match >= 48 and worst <= 1.3 and elapsed <= 120
    acceptance_record("C1", ok, f"ordering match {match}/50, worst ratio {worst:.6f} <= 1.3, "
                      f"{elapsed:.1f}s <= 120s")
    assert ok


def test_c3_nesting_of_forward_embeddings(round_trips, acceptance_record):
    rows, _, _ = round_trips
    bad = [r for r in rows if r["err"] or
           tuple(r["order"]) != tuple(int(i) for i in np.argsort(-r["f"], kind="stable"))]
    ok = not bad
    acceptance_record("C3", ok, f"{50 - len(bad)}/50 nesting orders total and equal to "
                      "descending f")
    assert ok, bad[:3]


# --- criterion 2 -----------------------------------------------------------

def _random_circle_map(net, seed):
    rng = np.random.default_rng(seed)
    th = np.arctan2(net.points[:, 1], net.points[:, 0])
    a = rng.uniform(0, 2 * np.pi)
    rot = np.array([[np.cos(a), -np.sin(a)], [np.sin(a), np.cos(a)]])
    img = net.points @ (rot @ np.diag(rng.uniform(0.95, 1.4, 2))).T + rng.uniform(-1, 1, 2)
    for k in range(2, 6):
        phase = rng.uniform(0, 2 * np.pi, 2)
        img += rng.normal(0, 0.03) * np.c_[np.cos(k * th + phase[0]), np.sin(k * th + phase[1])]
    k = int(rng.integers(20, 60))
    img += rng.uniform(0, 0.04) * np.c_[np.cos(k * th), np.sin(k * th)]
    return img


def test_c2_hole_of_radius_quarter(acceptance_record):
    t0 = time.perf_counter()
    net = epsilon_dense_sphere(2, 1.0, 0.02)
    h = 1 / 512
    accepted, failures, smallest, seed = 0, 0, math.inf, 0
    while accepted < 200:
        img = _random_circle_map(net, seed)
        seed += 1
        if not slack_check(net, img, 0.1, seed=seed).passed:
            continue
        accepted += 1
        rep = compute_holes(pl_extension(net, img), h)
        r = max((hl.inradius_estimate for hl in rep.holes), default=0.0)
        smallest = min(smallest, r)
        failures += r < 0.25 - 2 * h
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed <= 60
    acceptance_record("C2", ok, f"{failures} failures in 200 maps ({seed} drawn), smallest "
                      f"largest-hole inradius {smallest:.4f} >= {0.25 - 2 * h:.4f}, {elapsed:.1f}s")
    assert ok


# --- criterion 4 -----------------------------------------------------------

def test_c4_layered_reduction_consistent_side(acceptance_record):
    t0 = time.perf_counter()
    t = BetweennessInstance(4, FOUR_ELEMENT_TRIPLES, NON_BETWEENNESS)
    order = consistency_check(t)
    s = section5_space(t, D=1.0, d=2, eps=0.1, R=12.0)
    e = section5_embedding(s, order)
    rep = section5_report(s, e)
    dist = checked_distortion(s.space, e.coords)
    kappa = rep["kappa"]
    rec = recover_ordering(s, e)
    elapsed = time.perf_counter() - t0
    ok = (kappa <= 4 and dist <= kappa * t.n + 1e-9 and t.satisfied_by(rec) and elapsed <= 60)
    acceptance_record("C4", ok, f"{s.size} points, distortion {dist:.3f}, kappa {kappa:.3f} <= 4, "
                      f"recovered {rec} consistent={t.satisfied_by(rec)}, {elapsed:.1f}s")
    assert ok


# --- criterion 5 -----------------------------------------------------------

def test_c5_conversion_equivalence(acceptance_record):
    rng = np.random.default_rng(5)
    disagree = 0
    for _ in range(500):
        n = int(rng.integers(3, 6))
        k = int(rng.integers(1, 4))
        triples = tuple(tuple(int(v) + 1 for v in rng.permutation(n)[:3]) for _ in range(k))
        t = BetweennessInstance(n, triples)
        a = consistency_check(t) is not None
        b = consistency_check(to_non_betweenness(t)) is not None
        disagree += a != b
    ok = disagree == 0
    acceptance_record("C5", ok, f"{500 - disagree}/500 verdicts agree")
    assert ok


# --- criterion 6 -----------------------------------------------------------

def test_c6_branching_graph(acceptance_record):
    problems = []
    for n in range(3, 8):
        b = branching_graph(n)
        g = b.graph
        edges = list(g.edges())
        members = {i: [v for v in g if i in v] for i in range(1, n + 1)}
        for i, vs in members.items():
            if not connected(vs, edges):
                problems.append((n, "G_i", i))
        for i, j in itertools.combinations(range(1, n + 1), 2):
            common = [v for v in members[i] if j in v]
            if not connected(common, edges):
                problems.append((n, "G_i & G_j", i, j))
        for v in g:
            if sum(i in v for i in range(1, n + 1)) > 3:
                problems.append((n, "membership", sorted(v)))
        for tri in itertools.combinations(range(1, n + 1), 3):
            if frozenset(tri) not in g:
                problems.append((n, "triple", tri))
    ok = not problems
    acceptance_record("C6", ok, f"four properties for n = 3..7, {len(problems)} violations")
    assert ok, problems[:5]


# --- criterion 7 -----------------------------------------------------------

@pytest.fixture(scope="module")
def k33():
    return k33_space(60, 10, 0.5)


def test_c7a_subsets_embed(k33, acceptance_record):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        subset = sorted(int(i) for i in rng.choice(k33.n, size=k33.k, replace=False))
        e = k33_subspace_embedding(k33, subset)
        worst = max(worst, checked_distortion(e.source, e.coords))
    ok = worst <= 1.5
    acceptance_record("C7a", ok, f"worst subset distortion {worst:.4f} <= 1.5 over 100 subsets")
    assert ok


def test_c7b_crossing_certificate(k33, acceptance_record):
    t0 = time.perf_counter()
    e, rep = embed_rd(k33.metric, 2, seeds=range(10))
    cert = crossing_certificate(k33, e)
    ratio = cert.L / (k33.n * k33.w)
    elapsed = time.perf_counter() - t0
    ok = ratio >= 0.5 and elapsed <= 300
    acceptance_record("C7b", ok, f"L = {cert.L:.4f}, L/(n w) = {ratio:.3f} >= 0.5 "
                      f"(embedding distortion {rep.distortion:.3f}), {elapsed:.1f}s")
    assert ok


# --- criterion 8 -----------------------------------------------------------

def _test_metric(n, seed):
    rng = np.random.default_rng(seed)
    family = seed % 3
    if family == 0:
        pts = rng.normal(size=(n, 8))
        d = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    elif family == 1:
        d = random_metric(seed, n, 1.0, 10.0)
    else:
        w = np.triu(rng.uniform(1.0, 2.0, (n, n)), 1)
        d = w + w.T
    return FiniteMetric(tuple(map(str, range(n))), d)


def test_c8_upper_bound_pipeline(acceptance_record):
    t0 = time.perf_counter()
    runs = []
    for n in (16, 32, 64):
        for d in (2, 3):
            for seed in range(3):
                m = _test_metric(n, 100 * n + 10 * d + seed)
                e, rep = embed_rd(m, d, seeds=(seed,))
                checked_distortion(m, e.coords)
                assert rep.bound == pytest.approx(rd_bound(n, d))
                runs.append((n, d, seed, rep.c_achieved))
    elapsed = time.perf_counter() - t0
    good = sum(c <= 1 for *_, c in runs)
    ok = good >= 0.8 * len(runs) and elapsed <= 300
    detail = ", ".join(f"({n},{d},{s}):{c:.3f}" for n, d, s, c in runs)
    acceptance_record("C8", ok, f"c_achieved <= 1 in {good}/{len(runs)} runs, {elapsed:.1f}s; "
                      f"c_achieved per (n,d,seed) {detail}")
    assert ok


# --- criterion 9 -----------------------------------------------------------

def test_c9_oracles(round_trips, acceptance_record):
    # distortion against the two-pass loop, including every distortion above
    rng = np.random.default_rng(9)
    for seed in range(30):
        n = int(rng.integers(2, 40))
        m = FiniteMetric.from_points(rng.normal(size=(n, 3)))
        checked_distortion(m, rng.normal(size=(n, int(rng.integers(1, 4)))))
    dist_err = max(ORACLE_LOG)

    # optimal line distortion against one LP per ordering
    line_err = 0.0
    for seed in range(20):
        n = 2 + seed % 4
        m = FiniteMetric(tuple(map(str, range(n))), random_metric(500 + seed, n))
        ours = optimal_line_embedding_bruteforce(m).distortion
        line_err = max(line_err, abs(ours - lp_line_distortion(m.dist)) / ours)

    # winding containment against flood fill on every nesting instance here
    rings = []
    for r in range(4):
        th = np.linspace(0, 2 * np.pi, 120 + 17 * r, endpoint=False)
        rad = (4 - r) * (1 + 0.2 * np.cos(3 * th + r))
        rings.append(np.c_[rad * np.cos(th), rad * np.sin(th)] + 0.1 * r)
    wind_ok = np.array_equal(winding_containment(rings),
                             flood_containment_matrix([ClosedPolyline(v) for v in rings], 0.01))
    # and on the layer curves of the consistent reduction embedding
    t = BetweennessInstance(4, FOUR_ELEMENT_TRIPLES, NON_BETWEENNESS)
    s = section5_space(t, D=1.0, d=2, eps=0.1, R=12.0)
    e = section5_embedding(s, consistency_check(t))
    layers = [e.coords[s.layer_points(layer)] for layer in range(1, 5)]
    wind_ok &= np.array_equal(winding_containment(layers),
                              flood_containment_matrix([ClosedPolyline(v) for v in layers], 0.05))
    _, _, flood_ok = round_trips
    flood_all = all(flood_ok) and len(flood_ok) == 50

    ok = dist_err <= 1e-12 and line_err <= 1e-4 and wind_ok and flood_all
    acceptance_record("C9", ok, f"distortion vs two-pass max rel err {dist_err:.1e} over "
                      f"{len(ORACLE_LOG)} maps; line optimum vs LP max rel err {line_err:.1e}; "
                      f"winding vs flood {'agree' if wind_ok and flood_all else 'DISAGREE'}")
    assert ok
