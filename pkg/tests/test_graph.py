import numpy as np
import pytest

from dra_grid import (
    ShapeError,
    SizeError,
    StrategyGraph,
    complete_graph,
    is_connected,
    quadratic_form,
    ring_graph,
)


def test_ring3_laplacian_rows():
    g = ring_graph(3)
    expected = np.array([[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]])
    assert np.array_equal(g.laplacian, expected)


def test_ring2_is_single_edge():
    g = ring_graph(2)
    assert np.array_equal(g.laplacian, np.array([[1.0, -1.0], [-1.0, 1.0]]))
    assert np.array_equal(g.adjacency, np.array([[0.0, 1.0], [1.0, 0.0]]))


@pytest.mark.parametrize("n", [2, 3, 5, 10, 33])
def test_laplacian_annihilates_ones(n):
    g = ring_graph(n)
    assert np.allclose(g.laplacian @ np.ones(n), 0.0, atol=1e-12)


def test_ring_too_small():
    with pytest.raises(SizeError):
        ring_graph(1)
    with pytest.raises(SizeError):
        complete_graph(1)


def test_connectivity():
    assert is_connected(ring_graph(5))
    assert is_connected(complete_graph(3))
    # two disjoint edges on 4 nodes
    adj = np.zeros((4, 4))
    adj[0, 1] = adj[1, 0] = 1.0
    adj[2, 3] = adj[3, 2] = 1.0
    assert not is_connected(StrategyGraph(4, adj))


def test_rings_connected_up_to_64():
    assert all(is_connected(ring_graph(n)) for n in range(2, 65))


def test_quadratic_form_values():
    assert quadratic_form(ring_graph(4), np.full(4, 3.7)) == 0.0
    assert quadratic_form(ring_graph(3), np.array([0.0, 1.0, 2.0])) == 6.0
    assert quadratic_form(ring_graph(2), np.array([1.0, -1.0])) == 4.0


def test_quadratic_form_shape_check():
    with pytest.raises(ShapeError):
        quadratic_form(ring_graph(3), np.zeros(4))


def test_quadratic_form_matches_matrix_form():
    rng = np.random.default_rng(7)
    for n in (2, 5, 9):
        g = ring_graph(n)
        for _ in range(20):
            v = rng.normal(size=n) * 100.0
            assert quadratic_form(g, v) == pytest.approx(float(v @ g.laplacian @ v), rel=1e-12)


@pytest.mark.parametrize("maker", [ring_graph, complete_graph])
def test_graph_invariants(maker):
    rng = np.random.default_rng(11)
    for n in range(2, 17):
        g = maker(n)
        assert np.array_equal(g.adjacency, g.adjacency.T)
        assert np.all(np.diag(g.adjacency) == 0.0)
        assert np.max(np.abs(g.laplacian.sum(axis=1))) < 1e-12
        assert is_connected(g)
        for _ in range(10):
            assert quadratic_form(g, rng.normal(size=n)) >= 0.0


def test_asymmetric_adjacency_rejected():
    adj = np.zeros((3, 3))
    adj[0, 1] = 1.0
    with pytest.raises(ShapeError):
        StrategyGraph(3, adj)
