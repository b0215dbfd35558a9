import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpcore import (MultiplexAdjacency, add_noise_layer, aggregate, generate_sbm_multiplex,
                    ideal_lshape_multiplex, largest_connected_component, load_edge_list,
                    save_edge_list)
from mpcore.tensor import EdgeListError, write_index_map
from oracles import random_multiplex


def write(tmp_path, text, name="g.edges"):
    path = tmp_path / name
    path.write_text(text)
    return path


def edge_set(A, k):
    lo, hi = A.upper_edges(k)
    return set(zip(lo.tolist(), hi.tolist()))


class TestLoadEdgeList:

    def test_two_edge_path(self, tmp_path):
        A = load_edge_list(write(tmp_path, "1 1 2\n1 2 3\n"))
        assert (A.num_nodes, A.num_layers) == (3, 1)
        assert edge_set(A, 0) == {(0, 1), (1, 2)}
        assert A.n1[0] == 4
        assert A.layers[0][1, 0] == 1

    def test_duplicate_and_self_loop(self, tmp_path):
        A = load_edge_list(write(tmp_path, "1 1 2\n1 2 1\n1 1 1\n"))
        assert edge_set(A, 0) == {(0, 1)}
        assert A.n1[0] == 2

    def test_comments_weights_and_remap(self, tmp_path):
        text = "# header\n\n3 10 20 1.5\n3 20 30 0\n7 10 30 2\n"
        A = load_edge_list(write(tmp_path, text))
        assert A.node_labels.tolist() == [10, 20, 30]
        assert A.layer_labels.tolist() == [3, 7]
        assert edge_set(A, 0) == {(0, 1)}  # zero weight dropped
        assert edge_set(A, 1) == {(0, 2)}

    def test_zero_based_ids(self, tmp_path):
        A = load_edge_list(write(tmp_path, "0 0 1\n"), id_base=0)
        assert A.num_nodes == 2

    @pytest.mark.parametrize("text, fragment", [
        ("1 1 2\n1 2\n", "line 2"),
        ("1 a 2\n", "line 1"),
        ("1 1 2 -1\n", "line 1"),
        ("1 0 2\n", "below id base"),
        ("# nothing\n", "no edges"),
    ])
    def test_errors(self, tmp_path, text, fragment):
        with pytest.raises(EdgeListError, match=fragment):
            load_edge_list(write(tmp_path, text))

    def test_delimiter(self, tmp_path):
        A = load_edge_list(write(tmp_path, "1,1,2\n1,2,3\n"), delimiter=",")
        assert A.num_edges(0) == 2

    def test_round_trip(self, tmp_path, rng):
        A = random_multiplex(rng, 30, 3, density=0.3)
        A, _ = largest_connected_component(A)  # no isolated nodes to lose
        p1 = tmp_path / "a.edges"
        save_edge_list(A, p1, use_labels=False)
        B = load_edge_list(p1, id_base=0)
        p2 = tmp_path / "b.edges"
        save_edge_list(B, p2)
        C = load_edge_list(p2, id_base=0)
        for k in range(A.num_layers):
            assert edge_set(A, k) == edge_set(B, k) == edge_set(C, k)

    def test_index_map(self, tmp_path):
        A = load_edge_list(write(tmp_path, "1 5 9\n"))
        write_index_map(A, tmp_path / "map.csv")
        assert (tmp_path / "map.csv").read_text().splitlines() == ["original,internal", "5,0", "9,1"]


class TestInvariants:

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 25), st.integers(1, 4), st.integers(0, 2**31))
    def test_constructor_invariants(self, n, L, seed):
        rng = np.random.default_rng(seed)
        raw = [(rng.integers(0, n, 40), rng.integers(0, n, 40)) for _ in range(L)]
        A = MultiplexAdjacency(n, raw)
        for k, m in enumerate(A.layers):
            d = m.toarray()
            assert np.array_equal(d, d.T)
            assert not np.diag(d).any()
            assert set(np.unique(d)) <= {0.0, 1.0}
            assert A.n1[k] == A.degrees[k].sum() == d.sum()
            assert A.n1[k] + A.n2[k] == n * n

    def test_immutable(self, rng):
        A = random_multiplex(rng, 10, 2)
        with pytest.raises(ValueError):
            A.degrees[0, 0] = 5
        with pytest.raises(ValueError):
            A.layers[0].data[0] = 3.0

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            MultiplexAdjacency(3, [([0], [3])])


class TestLargestComponent:

    def test_two_triangles_tie(self):
        A = MultiplexAdjacency.from_edges(6, [[(3, 4), (4, 5), (3, 5), (0, 1), (1, 2), (0, 2)]])
        sub, remap = largest_connected_component(A, "aggregated")
        assert sub.num_nodes == 3
        assert remap.tolist() == [0, 1, 2, -1, -1, -1]

    def test_single_layer_mode(self):
        # path 0-1-2 in layer 0; nodes 3,4 joined to the path only in layer 1
        A = MultiplexAdjacency.from_edges(5, [[(0, 1), (1, 2)], [(2, 3), (3, 4)]])
        sub, remap = largest_connected_component(A, "single_layer", 0)
        assert sub.num_nodes == 3
        assert remap.tolist() == [0, 1, 2, -1, -1]
        assert sub.num_edges(1) == 0
        full, _ = largest_connected_component(A, "aggregated")
        assert full.num_nodes == 5

    def test_bad_mode(self, star):
        with pytest.raises(ValueError):
            largest_connected_component(star, "single_layer", 4)


class TestNoiseLayer:

    def test_zero_noise(self, star):
        B = add_noise_layer(star, 0.0, seed=3)
        assert B.num_layers == 2 and B.n1[1] == 0

    def test_count_and_determinism(self, rng):
        # informative layer with exactly 48436 undirected edges
        n = 2000
        u, v = np.triu_indices(n, 1)
        pick = rng.choice(u.size, 48436, replace=False)
        A = MultiplexAdjacency(n, [(u[pick], v[pick])])
        assert A.num_edges(0) == 48436
        B = add_noise_layer(A, 0.25, seed=1)
        lo, hi = B.upper_edges(1)
        # tally straight from the generated pairs
        assert len(set(zip(lo.tolist(), hi.tolist()))) == 12109
        assert np.all(lo < hi)
        C = add_noise_layer(A, 0.25, seed=1)
        assert edge_set(B, 1) == edge_set(C, 1)
        D = add_noise_layer(A, 0.25, seed=2)
        assert edge_set(B, 1) != edge_set(D, 1)

    def test_too_many(self):
        A = MultiplexAdjacency.from_edges(3, [[(0, 1)]])
        with pytest.raises(ValueError):
            add_noise_layer(A, 4.0, seed=0)

    def test_requires_single_layer(self, rng):
        with pytest.raises(ValueError):
            add_noise_layer(random_multiplex(rng, 5, 2), 0.1, 0)


class TestSBM:

    def test_ideal_probabilities(self):
        A = generate_sbm_multiplex(12, 2, [4, 6], (1.0, 1.0, 0.0), seed=0)
        B = ideal_lshape_multiplex(12, [4, 6])
        for k in range(2):
            assert edge_set(A, k) == edge_set(B, k)

    def test_empty(self):
        A = generate_sbm_multiplex(12, 2, 4, (0.0, 0.0, 0.0), seed=0)
        assert A.n1.tolist() == [0, 0]

    def test_expected_edge_count(self):
        # 0.9*C(20,2) + 0.5*20*80 + 0.05*C(80,2) = 171 + 800 + 158 = 1129
        expected = 0.9 * 190 + 0.5 * 1600 + 0.05 * 3160
        var = 190 * 0.9 * 0.1 + 1600 * 0.25 + 3160 * 0.05 * 0.95
        counts = [generate_sbm_multiplex(100, 1, 20, (0.9, 0.5, 0.05), seed=s).num_edges(0)
                  for s in range(100)]
        assert abs(np.mean(counts) - expected) < 3 * np.sqrt(var / 100)

    def test_permuted_core(self):
        A = generate_sbm_multiplex(30, 1, 5, (1.0, 1.0, 0.0), seed=4, permute_core=True)
        deg = A.degrees[0]
        assert np.sum(deg == 29) == 5

    def test_invalid_probability(self):
        with pytest.raises(ValueError):
            generate_sbm_multiplex(10, 1, 3, (1.2, 0.0, 0.0), seed=0)


class TestAggregate:

    def test_unit_vector(self, rng):
        A = random_multiplex(rng, 15, 3)
        assert (aggregate(A, [1, 0, 0]) != A.layers[0]).nnz == 0

    def test_identical_layers(self):
        e = [(0, 1), (1, 2), (2, 3)]
        A = MultiplexAdjacency.from_edges(4, [e, e])
        assert (aggregate(A, [0.5, 0.5]) != A.layers[0]).nnz == 0

    def test_disjoint_weighted(self):
        A = MultiplexAdjacency.from_edges(3, [[(0, 1)], [(1, 2)]])
        W = aggregate(A, [2, 3]).toarray()
        assert W.tolist() == [[0, 2, 0], [2, 0, 3], [0, 3, 0]]

    def test_linear_in_weights(self, rng):
        A = random_multiplex(rng, 20, 4)
        c1, c2 = rng.random(4), rng.random(4)
        lhs = aggregate(A, c1 + c2).toarray()
        rhs = aggregate(A, c1).toarray() + aggregate(A, c2).toarray()
        np.testing.assert_allclose(lhs, rhs, rtol=1e-15, atol=1e-15)

    def test_degree_identity(self, rng):
        A = random_multiplex(rng, 20, 4)
        c = rng.random(4)
        np.testing.assert_allclose(np.asarray(aggregate(A, c).sum(axis=1)).ravel(),
                                   c @ A.degrees, rtol=1e-14)

    def test_dimension_mismatch(self, star):
        with pytest.raises(ValueError):
            aggregate(star, [1, 1])
