import random

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import floyd_warshall, random_connected_edges, row_normalize_loop, tile_loop
from tactile_har.errors import EvenWindow, InvalidEdgeIndex, MalformedRecord, ZeroFrames
from tactile_har.graph import (
    DEFAULT_EDGES,
    HEAD,
    MultiScaleAdjacency,
    SkeletonGraph,
    base_adjacency,
    format_matrix,
    k_hop_adjacency,
    normalize_adjacency,
    parse_matrix,
    st_graph,
    window_adjacency,
)


@pytest.fixture(scope="module")
def A25():
    return base_adjacency(SkeletonGraph.default())


def _adj(n, edges0):
    A = np.zeros((n, n))
    for i, j in edges0:
        A[i, j] = A[j, i] = 1
    return A


class TestDefaultSkeleton:
    def test_is_a_tree(self, A25):
        assert len(DEFAULT_EDGES) == 24
        g = nx.Graph(DEFAULT_EDGES)
        assert g.number_of_nodes() == 25 and nx.is_tree(g)

    def test_base_adjacency(self, A25):
        assert (A25 == A25.T).all()
        assert np.count_nonzero(A25) == 48
        assert np.trace(A25) == 0

    def test_head_is_leaf(self, A25):
        degree = sum(1 for e in DEFAULT_EDGES if HEAD in e)
        assert degree == 1 == A25[HEAD - 1].sum()

    def test_v2_joints_attach_to_their_fill_sources(self):
        # fill-in table copies 21 <- 3, 22/23 <- 7, 24/25 <- 11; each is within two bones
        g = nx.Graph(DEFAULT_EDGES)
        for target, source in {21: 3, 22: 7, 23: 7, 24: 11, 25: 11}.items():
            assert nx.shortest_path_length(g, target, source) <= 2

    def test_empty_edges(self):
        assert not base_adjacency(SkeletonGraph(5, ())).any()

    @pytest.mark.parametrize("edges", [((1, 26),), ((0, 2),), ((3, 3),), ((1, 2), (2, 1))])
    def test_invalid_edges(self, edges):
        with pytest.raises(InvalidEdgeIndex):
            SkeletonGraph(25, edges)


class TestKHop:
    def test_zero_hop_is_identity(self, A25):
        np.testing.assert_array_equal(k_hop_adjacency(A25, 0), np.eye(25))

    def test_path_graph_two_hops(self):
        M = k_hop_adjacency(_adj(3, [(0, 1), (1, 2)]), 2)
        expected = np.zeros((3, 3))
        expected[0, 2] = expected[2, 0] = 1
        np.testing.assert_array_equal(M, expected)

    def test_beyond_diameter_is_zero(self, A25):
        assert not k_hop_adjacency(A25, 40).any()

    def test_default_skeleton_against_floyd_warshall(self, A25):
        dist = floyd_warshall(25, [(i - 1, j - 1) for i, j in DEFAULT_EDGES])
        diameter = max(max(row) for row in dist)
        hops = [k_hop_adjacency(A25, k) for k in range(diameter + 1)]
        for i in range(25):
            for j in range(25):
                owners = [k for k, h in enumerate(hops) if h[i, j] == 1]
                assert owners == [dist[i][j]]

    def test_disconnected_pairs_in_no_scale(self):
        A = _adj(4, [(0, 1), (2, 3)])
        total = sum(k_hop_adjacency(A, k) for k in range(4))
        assert total[0, 2] == 0 and total[0, 1] == 1


class TestNormalize:
    def test_identity(self):
        np.testing.assert_array_equal(normalize_adjacency(np.eye(4)), np.eye(4))

    def test_path_with_self_loops(self):
        N = normalize_adjacency(_adj(3, [(0, 1), (1, 2)]), add_self_loops=True)
        np.testing.assert_allclose(N[1], [1 / 3, 1 / 3, 1 / 3], rtol=0, atol=1e-15)
        np.testing.assert_allclose(N, row_normalize_loop((_adj(3, [(0, 1), (1, 2)]) + np.eye(3)).tolist()))

    def test_zero_rows_stay_zero(self):
        A = _adj(4, [(0, 1)])
        N = normalize_adjacency(A)
        assert not N[2].any() and not N[3].any()

    @given(st.lists(st.floats(0, 10, allow_nan=False), min_size=36, max_size=36))
    @settings(max_examples=100, deadline=None)
    def test_rows_stochastic(self, values):
        M = np.array(values).reshape(6, 6)
        N = normalize_adjacency(M)
        sums = N.sum(axis=1)
        for s, row in zip(sums, M):
            assert abs(s - (1.0 if row.sum() > 0 else 0.0)) <= 1e-9
        assert ((N >= 0) & (N <= 1 + 1e-12)).all()


class TestMultiScale:
    def test_invariants(self, A25):
        adj = MultiScaleAdjacency.build(A25, 3)
        np.testing.assert_array_equal(adj.hops[0], np.eye(25))
        for h in adj.hops:
            assert (h == h.T).all()
        for a in range(4):
            for b in range(a + 1, 4):
                assert not (adj.hops[a] * adj.hops[b]).any()
        for n in adj.normalized:
            sums = n.sum(axis=1)
            assert np.all((np.abs(sums - 1) <= 1e-9) | (sums == 0))

    def test_partition_of_all_pairs(self, A25):
        full = MultiScaleAdjacency.build(A25, 30)
        np.testing.assert_array_equal(sum(full.hops), np.ones((25, 25)))

    def test_permutation_covariance(self, A25, rng):
        perm = rng.permutation(25)
        P = np.eye(25)[perm]
        adj = MultiScaleAdjacency.build(A25, 3)
        relabeled = MultiScaleAdjacency.build(P @ A25 @ P.T, 3)
        for a, b in zip(relabeled.hops, adj.permuted(perm).hops):
            np.testing.assert_array_equal(a, b)
        for a, b in zip(relabeled.normalized, adj.permuted(perm).normalized):
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)
        for h, ph in zip(adj.hops, relabeled.hops):
            np.testing.assert_array_equal(P @ h @ P.T, ph)


class TestSTGraph:
    def test_single_frame(self, A25):
        np.testing.assert_array_equal(st_graph(A25, 1).toarray(), A25)

    @pytest.mark.parametrize("T", [1, 2, 5])
    def test_counts(self, A25, T):
        G = st_graph(A25, T)
        assert G.shape == (T * 25, T * 25)
        # counting oracle: unordered node pairs with a nonzero entry
        dense = G.toarray()
        pairs = {(min(i, j), max(i, j)) for i, j in zip(*np.nonzero(dense))}
        assert len(pairs) == T * 24 + (T - 1) * 25

    def test_temporal_links_same_joint(self, A25):
        dense = st_graph(A25, 3).toarray()
        for t in range(2):
            for v in range(25):
                assert dense[t * 25 + v, (t + 1) * 25 + v] == 1
                assert dense[t * 25 + v, (t + 1) * 25 + (v + 1) % 25] == 0

    def test_zero_frames(self, A25):
        with pytest.raises(ZeroFrames):
            st_graph(A25, 0)


class TestWindow:
    def test_tau_one(self, A25):
        np.testing.assert_array_equal(window_adjacency(A25, 1).block, A25)

    def test_tiling_oracle(self):
        hop = _adj(2, [(0, 1)])
        block = window_adjacency(hop, 3).block
        assert block.shape == (6, 6)
        np.testing.assert_array_equal(block, np.array(tile_loop(hop.tolist(), 3)))
        for a in range(3):
            for b in range(3):
                np.testing.assert_array_equal(block[2 * a:2 * a + 2, 2 * b:2 * b + 2], hop)

    def test_symmetric(self, A25):
        for k in range(3):
            block = window_adjacency(k_hop_adjacency(A25, k), 5).block
            assert (block == block.T).all()

    @pytest.mark.parametrize("tau", [0, 2, 4, -1])
    def test_even_window(self, A25, tau):
        with pytest.raises(EvenWindow):
            window_adjacency(A25, tau)


def test_random_connected_graphs_against_networkx():
    r = random.Random(7)
    for _ in range(30):
        n = r.randint(2, 12)
        edges = random_connected_edges(r, n)
        A = _adj(n, edges)
        lengths = dict(nx.all_pairs_shortest_path_length(nx.Graph(edges)))
        for k in range(n):
            M = k_hop_adjacency(A, k)
            for i in range(n):
                for j in range(n):
                    assert M[i, j] == (lengths[i][j] == k)


class TestMatrixDump:
    def test_round_trip(self, A25, rng):
        M = normalize_adjacency(A25, True)
        back, roi = parse_matrix(format_matrix(M))
        assert roi is None
        np.testing.assert_array_equal(back, M)
        R = rng.normal(size=(3, 5))
        back, roi = parse_matrix(format_matrix(R, (1, 2, 5, 4)))
        np.testing.assert_array_equal(back, R)
        assert roi == (1, 2, 5, 4)

    def test_square_header(self):
        assert format_matrix(np.eye(2)) == "2\n1 0\n0 1\n"

    @pytest.mark.parametrize("text", ["", "2\n1 0\n", "2 3\n1 2 3\n4 5\n", "x\n", "1\nfoo\n"])
    def test_malformed(self, text):
        with pytest.raises(MalformedRecord):
            parse_matrix(text)
