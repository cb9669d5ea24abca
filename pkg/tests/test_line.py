import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import lp_line_distortion, random_metric

from embedlab.errors import NotNested, TooLarge
from embedlab.gadget import epsilon_dense_sphere, forward_embedding, product_space, reduction_gadget
from embedlab.line import (LineEmbedding, extract_line_embedding, line_distortion,
                           nesting_comparator, optimal_line_embedding_bruteforce,
                           order_feasibility)
from embedlab.metric import FiniteMetric


def metric(d):
    d = np.asarray(d, dtype=float)
    return FiniteMetric(tuple(str(i) for i in range(len(d))), d)


TRI = metric(1 - np.eye(3))
C4 = metric([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]])


def circle(r, m=200, center=(0.0, 0.0)):
    th = np.linspace(0, 2 * np.pi, m, endpoint=False)
    return np.c_[r * np.cos(th), r * np.sin(th)] + np.asarray(center)


# --- feasibility --------------------------------------------------------------

def test_two_point_feasibility():
    m = metric([[0, 2.5], [2.5, 0]])
    res = order_feasibility(m, (1, 0), 1.0)
    assert res.feasible
    assert res.positions[1] == 0.0 and res.positions[0] == pytest.approx(2.5)


def test_triangle_feasibility_threshold():
    assert not order_feasibility(TRI, (0, 1, 2), 1.9).feasible
    res = order_feasibility(TRI, (0, 1, 2), 2.0)
    assert res.feasible
    assert np.allclose(res.positions, [0, 1, 2])


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 6), st.integers(0, 2**31), st.floats(1.0, 6.0), st.floats(0.0, 3.0))
def test_feasibility_is_monotone_in_D(n, seed, D, extra):
    m = metric(random_metric(seed, n))
    order = tuple(np.random.default_rng(seed).permutation(n))
    if order_feasibility(m, order, D).feasible:
        res = order_feasibility(m, order, D + extra)
        assert res.feasible
        x = res.positions
        for a, b in itertools.combinations(range(n), 2):
            i, j = order[a], order[b]
            gap = x[j] - x[i]
            assert m.dist[i, j] * (1 - 1e-9) <= gap <= (D + extra) * m.dist[i, j] * (1 + 1e-9)


# --- brute force optimum ------------------------------------------------------

def test_bruteforce_examples():
    assert optimal_line_embedding_bruteforce(metric([[0, 1], [1, 0]])).distortion == 1.0
    assert optimal_line_embedding_bruteforce(TRI).distortion == pytest.approx(2.0, rel=1e-9)
    f = optimal_line_embedding_bruteforce(C4)
    assert f.distortion == pytest.approx(3.0, rel=1e-9)
    assert line_distortion(C4, [0, 1, 2, 3]) == pytest.approx(3.0)


def test_bruteforce_limit():
    with pytest.raises(TooLarge):
        optimal_line_embedding_bruteforce(metric(1 - np.eye(11)))


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**31))
def test_bruteforce_matches_lp_and_is_noncontracting(n, seed):
    m = metric(random_metric(seed, n))
    f = optimal_line_embedding_bruteforce(m)
    assert f.distortion == pytest.approx(lp_line_distortion(m.dist), rel=1e-4)
    assert line_distortion(m, f.positions) == pytest.approx(f.distortion, rel=1e-9)
    gaps = np.abs(f.positions[:, None] - f.positions[None])
    off = ~np.eye(n, dtype=bool)
    assert np.all(gaps[off] >= m.dist[off] * (1 - 1e-9))


def test_line_embedding_json(tmp_path):
    f = LineEmbedding(np.array([3.0, 1.0, 2.0]), 1.5)
    assert np.array_equal(f.positions, [2.0, 0.0, 1.0])
    assert tuple(f.ordering) == (1, 2, 0)
    f.save(tmp_path / "f.json")
    g = LineEmbedding.load(tmp_path / "f.json")
    assert np.array_equal(g.positions, f.positions) and g.distortion == 1.5


# --- nesting comparator -------------------------------------------------------

def test_concentric_circles():
    assert nesting_comparator(circle(2), circle(1)) == 0
    assert nesting_comparator(circle(1), circle(2)) == 1


def test_forward_layers_compare_by_value():
    x = metric([[0, 1], [1, 0]])
    p = product_space(x, epsilon_dense_sphere(2, 20.0, 0.5))
    g = forward_embedding(np.array([0.0, 1.0]), p)
    assert nesting_comparator(g.coords[p.layer(0)], g.coords[p.layer(1)]) == 1


def test_side_by_side_circles_are_not_nested():
    with pytest.raises(NotNested):
        nesting_comparator(circle(1), circle(1, center=(3, 0)))


def test_exact_tie_falls_back_to_index():
    a = np.array([[0.0, 0.0], [1, 1], [2, 0]])
    b = np.array([[0.0, 0.0], [1, -1], [2, 0]])
    assert nesting_comparator(a, b, 0, 1, check=False) == 0
    assert nesting_comparator(b, a, 1, 0, check=False) == 1


# --- extraction ---------------------------------------------------------------

def test_single_point_extraction():
    x = metric([[0.0]])
    p = product_space(x, epsilon_dense_sphere(2, 5.0, 0.5))
    ex = extract_line_embedding(forward_embedding(np.zeros(1), p), p)
    assert np.array_equal(ex.line.positions, [0.0])


def test_round_trip_on_a_path():
    f0 = np.array([0.0, 1.0, 3.0])
    x = metric(np.abs(f0[:, None] - f0[None]))
    _, p = reduction_gadget(x, 1.0)
    ex = extract_line_embedding(forward_embedding(f0, p), p)
    assert tuple(ex.line.ordering) == (0, 1, 2)
    assert ex.line.distortion <= 1.21 * line_distortion(x, f0)
    assert np.allclose(ex.line.positions, f0, atol=1e-9)


def small_round_trip(x, f, seed=0):
    p = product_space(x, epsilon_dense_sphere(2, 40.0, 0.5))
    g = forward_embedding(f, p)
    return extract_line_embedding(g, p, seed=seed), g, p


@settings(max_examples=12, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**31))
def test_extraction_bounds(n, seed):
    x = metric(random_metric(seed, n))
    f = optimal_line_embedding_bruteforce(x)
    ex, g, p = small_round_trip(x, f.positions)
    assert ex.scale_exact
    got = ex.line.positions
    assert tuple(ex.line.ordering) in (tuple(f.ordering), tuple(f.ordering[::-1]))
    D = ex.line.distortion
    diff = np.abs(got[:, None] - got[None])
    off = ~np.eye(n, dtype=bool)
    tol = ex.error_bound + 1e-9
    assert np.all(diff[off] >= x.dist[off] / 1.1 - tol)
    from embedlab.metric import distortion_of_map

    Dg = distortion_of_map(p.metric, g).distortion
    assert np.all(diff[off] <= Dg * x.dist[off] + tol)
    assert D <= 1.1 * Dg + 1e-9


def test_extraction_is_equivariant():
    d = random_metric(42, 4)
    x = metric(d)
    f = optimal_line_embedding_bruteforce(x)
    perm = np.array([2, 0, 3, 1])
    y = metric(d[np.ix_(perm, perm)])
    a, _, _ = small_round_trip(x, f.positions)
    b, _, _ = small_round_trip(y, f.positions[perm])
    assert np.allclose(b.line.positions, a.line.positions[perm], atol=1e-12)
