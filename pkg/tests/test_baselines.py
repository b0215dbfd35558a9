import numpy as np
import pytest

from mpcore import (MultiplexAdjacency, SolverParams, aggregate, eig_a, eig_q, h_index,
                    ideal_lshape_multiplex, ml_degree, nsm_aggregated, nsm_single_layer, solve)
from mpcore.baselines import _h_operator
from mpcore.quality import descending_order
from oracles import dense_q_matrices, random_multiplex


def clique(n):
    return MultiplexAdjacency.from_edges(n, [[(i, j) for i in range(n) for j in range(i + 1, n)]])


class TestMlDegree:

    def test_single_layer(self, star):
        assert ml_degree(star, [1.0]).x.tolist() == [4, 1, 1, 1, 1]

    def test_hand_sum(self):
        A = MultiplexAdjacency.from_edges(3, [[(0, 1), (0, 2)], [(1, 2)]])
        assert ml_degree(A, [0.5, 0.5]).x.tolist() == [1.0, 1.0, 1.0]

    def test_aggregate_identity(self, rng):
        A = random_multiplex(rng, 40, 4)
        c = rng.random(4)
        row_sums = np.asarray(aggregate(A, c).sum(axis=1)).ravel()
        np.testing.assert_allclose(ml_degree(A, c).x, row_sums, rtol=1e-15)

    def test_bad_weights(self, star):
        for c in ([1, 1], [-1], [0.0], [np.inf]):
            with pytest.raises(ValueError):
                ml_degree(star, c)


class TestEigA:

    def test_star_centre(self, star):
        x = eig_a(star, [1.0]).x
        assert x[0] > x[1:].max()
        np.testing.assert_allclose(x[1:], x[1])

    def test_identical_layers_independent_of_split(self, rng):
        B = random_multiplex(rng, 30, 1, density=0.3)
        lo, hi = B.upper_edges(0)
        A = MultiplexAdjacency(30, [(lo, hi), (lo, hi)])
        xs = [eig_a(A, [t, 1 - t]).x for t in (0.1, 0.5, 0.9)]
        for x in xs[1:]:
            np.testing.assert_allclose(x, xs[0], atol=1e-9)

    def test_disconnected_picks_dominant_component(self):
        # K4 plus a separate edge; the K4 Perron vector dominates
        edges = [(i, j) for i in range(4) for j in range(i + 1, 4)] + [(4, 5)]
        x = eig_a(MultiplexAdjacency.from_edges(6, [edges]), [1.0]).x
        np.testing.assert_allclose(x[:4], 0.5, atol=1e-8)
        assert np.all(x[4:] < 1e-8)

    def test_bipartite_converges(self):
        # even path is bipartite, plain power iteration would oscillate
        A = MultiplexAdjacency.from_edges(4, [[(0, 1), (1, 2), (2, 3)]])
        x = eig_a(A, [1.0]).x
        phi = (1 + 5 ** 0.5) / 2
        np.testing.assert_allclose(x / x[0], [1, phi, phi, 1], rtol=1e-8)

    def test_empty_aggregate(self):
        A = MultiplexAdjacency.from_edges(3, [[(0, 1)], []])
        with pytest.raises(ValueError):
            eig_a(A, [0.0, 1.0])


class TestEigQ:

    def test_planted_core_on_top(self):
        A = ideal_lshape_multiplex(12, [4])
        x = eig_q(A, [1.0]).x
        assert set(descending_order(x)[:4].tolist()) == {0, 1, 2, 3}

    def test_nonnegative(self, rng):
        A = random_multiplex(rng, 40, 3)
        x = eig_q(A, rng.random(3) + 0.1).x
        assert np.all(np.isfinite(x)) and np.all(x >= 0) and x.any()

    def test_is_top_eigenvector(self, rng):
        A = random_multiplex(rng, 25, 2)
        c = np.array([0.3, 0.7])
        Q = sum(w * M for w, M in zip(c, dense_q_matrices(A)))
        vals, vecs = np.linalg.eigh(Q)
        top = vecs[:, -1] * np.sign(vecs[:, -1].sum())
        expected = top - min(top.min(), 0)
        x = eig_q(A, c).x
        np.testing.assert_allclose(x, expected, atol=1e-7)

    def test_degenerate_layer(self):
        A = MultiplexAdjacency.from_edges(4, [[(0, 1), (1, 2)], []])
        with pytest.raises(ValueError):
            eig_q(A, [1.0, 1.0])
        assert eig_q(A, [1.0, 1.0], exclude_degenerate=True).x.size == 4


class TestHIndex:

    def test_star(self, star):
        assert h_index(star, [1.0]).x.tolist() == [1, 1, 1, 1, 1]

    def test_clique(self):
        assert h_index(clique(5), [1.0]).x.tolist() == [4] * 5

    def test_kcore_of_clique_with_tail(self):
        # the h-index fixed point equals the k-core number
        edges = [(i, j) for i in range(4) for j in range(i + 1, 4)] + [(3, 4), (4, 5)]
        A = MultiplexAdjacency.from_edges(6, [edges])
        assert h_index(A, [1.0]).x.tolist() == [3, 3, 3, 3, 1, 1]

    def test_monotone_iterates(self, rng):
        A = random_multiplex(rng, 60, 2)
        W = aggregate(A, [1, 1])
        h = np.diff(W.indptr)
        while True:
            new = _h_operator(W, h)
            assert np.all(new <= h)
            if np.array_equal(new, h):
                break
            h = new
        assert np.array_equal(h_index(A, [1, 1]).x, h)

    def test_binarises_weights(self, rng):
        A = random_multiplex(rng, 30, 3)
        a = h_index(A, [1, 2, 3])
        b = h_index(A, [1, 1, 1])
        assert np.array_equal(a.x, b.x)
        assert a.meta["binarised_weighted_aggregate"]
        assert not h_index(A, [1, 0, 0]).meta["binarised_weighted_aggregate"]


class TestNsm:

    def test_equals_solve_for_single_layer(self, rng):
        A = random_multiplex(rng, 40, 1)
        params = SolverParams.preset("global")
        res = nsm_single_layer(A.layers[0], params)
        np.testing.assert_allclose(res.x, solve(A, params).x, rtol=1e-13)

    def test_aggregated_weighted_vs_binarised(self, rng):
        A = random_multiplex(rng, 30, 2)
        w = nsm_aggregated(A, [1, 3])
        b = nsm_aggregated(A, [1, 3], binarise=True)
        assert w.method == "nsm-aggregated"
        np.testing.assert_allclose(b.x, nsm_single_layer(aggregate(A, [1, 1]), binarise=True).x,
                                   rtol=1e-13)
        assert not np.allclose(w.x, b.x)


@pytest.mark.parametrize("method", [ml_degree, eig_a, eig_q, h_index, nsm_aggregated])
def test_ranking_scale_invariant(method, rng):
    A = random_multiplex(rng, 35, 3)
    c = rng.random(3) + 0.1
    a = method(A, c)
    b = method(A, 4.5 * c)
    assert np.all(np.isfinite(a.x)) and np.all(a.x >= 0) and a.x.any()
    assert np.array_equal(descending_order(a.x), descending_order(b.x))
