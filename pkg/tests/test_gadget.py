import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import random_metric
from scipy.spatial import cKDTree

from embedlab.errors import (DegenerateParameters, NegativeLineValue, TooLarge,
                             UnnormalizedInput, UnsupportedDimension)
from embedlab.gadget import (C_NET, ProductSpace, SphereNet, epsilon_dense_sphere,
                             forward_distortion, forward_embedding, net_size, product_space,
                             reduction_gadget, reduction_parameters)
from embedlab.metric import EuclideanEmbedding, FiniteMetric, distortion_of_map, validate_metric


def metric(d):
    d = np.asarray(d, dtype=float)
    return FiniteMetric(tuple(str(i) for i in range(len(d))), d)


def sphere_samples(dim, radius, count, seed=0):
    g = np.random.default_rng(seed).normal(size=(count, dim))
    return radius * g / np.linalg.norm(g, axis=1, keepdims=True)


def max_gap(net: SphereNet, count=100_000, seed=0) -> float:
    s = sphere_samples(net.dim, net.radius, count, seed)
    return float(cKDTree(net.points).query(s)[0].max())


# --- nets -------------------------------------------------------------------

def test_coarse_circle_net_is_a_square():
    net = epsilon_dense_sphere(2, 1.0, 2.0)
    assert len(net) == 4
    assert np.allclose(np.sort(np.abs(net.points).max(axis=1)), 1.0)
    assert max_gap(net) <= 2 * math.sin(math.pi / 4) + 1e-12


def test_circle_net_size_and_density():
    net = epsilon_dense_sphere(2, 1.0, 0.1)
    assert len(net) == 63
    assert np.allclose(np.linalg.norm(net.points, axis=1), 1.0)
    assert max_gap(net) <= 0.1


def test_sphere_net_density_by_sampling():
    net = epsilon_dense_sphere(3, 1.0, 0.5)
    assert np.allclose(np.linalg.norm(net.points, axis=1), 1.0)
    assert max_gap(net) <= 0.5


@pytest.mark.parametrize("R,eps", [(1.0, 0.2), (5.0, 0.3), (20.0, 0.5), (3.0, 0.05)])
def test_sphere_net_size_bound_and_density(R, eps):
    net = epsilon_dense_sphere(3, R, eps)
    assert len(net) <= C_NET * (R / eps) ** 2
    assert len(net) == net_size(3, R, eps)
    assert max_gap(net, 20_000, seed=1) <= eps


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 50), st.floats(0.01, 1.0))
def test_circle_net_density_is_exact(R, eps):
    net = epsilon_dense_sphere(2, R, eps)
    m = len(net)
    # the farthest circle point from the net is midway along the longest arc
    ang = np.sort(np.arctan2(net.points[:, 1], net.points[:, 0]))
    arcs = np.diff(np.concatenate([ang, ang[:1] + 2 * np.pi]))
    assert 2 * R * math.sin(arcs.max() / 4) <= eps * (1 + 1e-12)
    assert m == net_size(2, R, eps)


def test_net_order_is_deterministic_and_round_trips(tmp_path):
    a = epsilon_dense_sphere(3, 2.0, 0.4)
    b = epsilon_dense_sphere(3, 2.0, 0.4)
    assert np.array_equal(a.points, b.points)
    a.save(tmp_path / "net.json")
    c = SphereNet.load(tmp_path / "net.json")
    assert np.array_equal(c.points, a.points) and c.radius == a.radius


def test_unsupported_dimension():
    with pytest.raises(UnsupportedDimension):
        epsilon_dense_sphere(4, 1.0, 0.1)


# --- parameters ---------------------------------------------------------------

def test_reduction_parameter_examples():
    two = metric([[0, 1], [1, 0]])
    p = reduction_parameters(two, 1.0)
    assert (p.R, p.epsilon) == (100.0, 0.01)
    assert p.predicted_net_size == math.ceil(2 * math.pi * 1e4) == 62832
    five = metric([[0, 1, 5], [1, 0, 5], [5, 5, 0]])
    q = reduction_parameters(five, 2.0)
    assert q.R == pytest.approx(1000.0) and q.epsilon == pytest.approx(0.005)
    assert q.R / q.epsilon == pytest.approx(q.C ** 2 * q.D_max ** 2 * q.Delta)


def test_reduction_parameter_errors():
    two = metric([[0, 1], [1, 0]])
    with pytest.raises(DegenerateParameters):
        reduction_parameters(two, 0.5)
    with pytest.raises(DegenerateParameters):
        reduction_parameters(two, 1.0, C=10)
    with pytest.raises(UnnormalizedInput):
        reduction_parameters(metric([[0, 2], [2, 0]]), 1.0)


# --- product space ------------------------------------------------------------

def small_net():
    return epsilon_dense_sphere(2, 3.0, 0.5)


def test_single_point_product_is_the_net():
    net = small_net()
    p = product_space(metric([[0.0]]), net)
    d = np.linalg.norm(net.points[:, None] - net.points[None], axis=-1)
    assert np.allclose(p.metric.dist, d)


def test_product_formula():
    t = 2 * math.asin(0.4)  # chord 4 on the radius-5 circle
    net = SphereNet(2, 5.0, 1.0, np.array([[5.0, 0.0], [5 * math.cos(t), 5 * math.sin(t)]]))
    p = product_space(metric([[0, 3], [3, 0]]), net)
    assert p.distances(p.index(0, 0), p.index(1, 0)) == pytest.approx(3.0)
    assert p.distances(p.index(0, 0), p.index(1, 1)) == pytest.approx(5.0)
    assert p.label(p.index(1, 1)) == "1#1"


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**31))
def test_product_between_max_and_sum(n, seed):
    x = metric(random_metric(seed, n)) if n > 1 else metric([[0.0]])
    p = product_space(x, small_net())
    validate_metric(p.metric)
    a = np.array([p.pair(i)[0] for i in range(p.size)])
    v = np.array([p.pair(i)[1] for i in range(p.size)])
    rx = x.dist[a[:, None], a[None]]
    rv = np.linalg.norm(p.net.points[v][:, None] - p.net.points[v][None], axis=-1)
    assert np.all(p.metric.dist >= np.maximum(rx, rv) - 1e-12)
    assert np.all(p.metric.dist <= rx + rv + 1e-12)


def test_sidecar_round_trip():
    p = product_space(metric(random_metric(1, 3)), small_net())
    q = ProductSpace.from_sidecar(p.sidecar())
    assert np.array_equal(q.metric.dist, p.metric.dist)


def test_dense_metric_is_capped():
    x = metric([[0, 1], [1, 0]])
    _, p = reduction_gadget(x, 1.0)
    with pytest.raises(TooLarge):
        p.metric


# --- forward embedding ----------------------------------------------------------

def test_zero_map_lands_on_sphere():
    x = metric([[0, 1], [1, 0]])
    _, p = reduction_gadget(x, 1.0)
    g = forward_embedding(np.zeros(2), p)
    assert np.allclose(np.linalg.norm(g.coords, axis=1), p.net.radius, rtol=1e-15)


def test_two_point_forward_distortion():
    x = metric([[0, 1], [1, 0]])
    _, p = reduction_gadget(x, 1.0)
    assert forward_distortion(np.array([0.0, 1.0]), p).distortion <= 1.1


def test_negative_line_value():
    _, p = reduction_gadget(metric([[0, 1], [1, 0]]), 1.0)
    with pytest.raises(NegativeLineValue):
        forward_embedding(np.array([0.5, 1.5]), p)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 4), st.integers(0, 2**31))
def test_symmetric_distortion_matches_dense(n, seed):
    x = metric(random_metric(seed, n))
    rng = np.random.default_rng(seed)
    f = np.concatenate([[0.0], np.cumsum(rng.uniform(1, 3, n - 1))])[rng.permutation(n)]
    p = product_space(x, epsilon_dense_sphere(2, 20.0, 0.7))
    fast = forward_distortion(f, p)
    dense = distortion_of_map(p.metric, forward_embedding(f, p))
    assert fast.distortion == pytest.approx(dense.distortion, rel=1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_forward_distortion_within_tenth(seed):
    from embedlab.line import optimal_line_embedding_bruteforce

    x = metric(random_metric(seed, 3, 1.0, 2.0))
    f = optimal_line_embedding_bruteforce(x)
    _, p = reduction_gadget(x, 1.0)
    assert forward_distortion(f.positions, p).distortion <= 1.1 * f.distortion


def test_layers_stay_apart():
    x = metric(random_metric(11, 3, 1.0, 2.0))
    f = np.array([0.0, 1.7, 3.1])
    params, p = reduction_gadget(x, 1.0)
    g = forward_embedding(f, p)
    for a in range(3):
        for b in range(a + 1, 3):
            tree = cKDTree(g.coords[p.layer(b)])
            gap = tree.query(g.coords[p.layer(a)])[0].min()
            assert gap >= x.dist[a, b] - 2 / params.C - 1e-9


def test_forward_source_attached_only_when_small():
    x = metric([[0, 1], [1, 0]])
    p = product_space(x, small_net())
    assert forward_embedding(np.array([0.0, 1.0]), p).source is not None
    _, big = reduction_gadget(x, 1.0)
    assert isinstance(forward_embedding(np.array([0.0, 1.0]), big), EuclideanEmbedding)
