from itertools import combinations

import numpy as np
import pytest

from balflow import _fast
from balflow.errors import InputError
from balflow.expander import (
    LoopedGraph,
    add_self_loops,
    certify_expander,
    conductance,
    decompose,
    volume,
    _exact_enum_numpy,
)


def clique(k, offset=0):
    return [(u + offset, v + offset) for u, v in combinations(range(k), 2)]


class TestVolumeConductance:
    def test_isolated_vertex_with_loops(self):
        g = LoopedGraph.from_edges(1, [(0, 0)] * 3)
        assert volume(g, [0]) == 6

    def test_triangle_single_vertex(self):
        g = LoopedGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
        assert volume(g, [0]) == 2

    def test_handshake_identity(self, rng):
        for _ in range(10):
            n = int(rng.integers(3, 12))
            edges = [
                (int(rng.integers(n)), int(rng.integers(n))) for _ in range(3 * n)
            ]
            g = LoopedGraph.from_edges(n, edges)
            members = rng.choice(n, size=int(rng.integers(1, n)), replace=False)
            rest = [v for v in range(n) if v not in set(int(x) for x in members)]
            total = volume(g, members) + (volume(g, rest) if rest else 0)
            assert total == 2 * g.edge_count()

    def test_k4_two_vertices(self):
        g = LoopedGraph.from_edges(4, clique(4))
        assert conductance(g, [0, 1]) == pytest.approx(2.0 / 3.0)

    def test_two_triangles_bridge(self):
        edges = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]
        g = LoopedGraph.from_edges(6, edges)
        assert conductance(g, [0, 1, 2]) == pytest.approx(1.0 / 7.0)

    def test_symmetry_at_equal_volumes(self):
        g = LoopedGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
        assert conductance(g, [0, 1]) == conductance(g, [2, 3])

    def test_zero_volume_rejected(self):
        g = LoopedGraph.from_edges(3, [(0, 1)])
        with pytest.raises(InputError):
            conductance(g, [2])


class TestCertify:
    def test_single_edge_certifies(self):
        g = LoopedGraph.from_edges(2, [(0, 1)])
        bound, cut = certify_expander(g, 1.0)
        assert cut is None
        assert bound == pytest.approx(1.0)

    def test_k8_exact_minimum(self):
        g = LoopedGraph.from_edges(8, clique(8))
        bound, cut = certify_expander(g, 0.2)
        assert cut is None
        assert bound == pytest.approx(4.0 / 7.0)

    def test_path_graph_fails_with_middle_cut(self):
        g = LoopedGraph.from_edges(10, [(i, i + 1) for i in range(9)])
        bound, cut = certify_expander(g, 0.5)
        assert bound is None
        assert conductance(g, cut) == pytest.approx(1.0 / 9.0)

    def test_kernel_and_numpy_enumerators_agree(self, rng):
        for _ in range(10):
            n = int(rng.integers(3, 11))
            edges = []
            for v in range(1, n):
                edges.append((int(rng.integers(v)), v))
            for _ in range(2 * n):
                u, v = int(rng.integers(n)), int(rng.integers(n))
                if u != v:
                    edges.append((u, v))
            eu = np.array([e[0] for e in edges], dtype=np.int64)
            ev = np.array([e[1] for e in edges], dtype=np.int64)
            deg = np.bincount(np.concatenate([eu, ev]), minlength=n).astype(np.float64)
            a_best, _ = _fast.exact_min_conductance(deg, eu, ev)
            b_best, _ = _exact_enum_numpy(deg.astype(np.int64), eu, ev)
            assert float(a_best) == pytest.approx(b_best, abs=1e-12)

    def test_eigen_path_never_over_certifies(self, rng):
        # compare the spectral certificate against exhaustive enumeration by
        # lowering the enumeration limit artificially is invasive; instead,
        # check on graphs just above the limit via the numpy enumerator
        for seed in range(4):
            r = np.random.default_rng(seed)
            n = 18
            edges = [(int(r.integers(n)), int(r.integers(n))) for _ in range(4 * n)]
            edges = [(u, v) for u, v in edges if u != v]
            for v in range(1, n):
                edges.append((int(r.integers(v)), v))
            g = LoopedGraph.from_edges(n, edges)
            bound, cut = certify_expander(g, 0.05)
            if bound is None:
                continue
            eu = g.edges[:, 0]
            ev = g.edges[:, 1]
            deg = g.degrees()
            true_min, _ = _exact_enum_numpy(deg, eu, ev)
            assert bound <= true_min + 1e-9


class TestDecompose:
    def test_single_expander_is_one_cluster(self):
        g = LoopedGraph.from_edges(8, clique(8))
        part = decompose(g, 0.2)
        assert len(part.clusters) == 1
        assert part.boundary.size == 0

    def test_two_cliques_bridge(self):
        edges = clique(8) + clique(8, offset=8) + [(0, 8)]
        g = LoopedGraph.from_edges(16, edges)
        part = decompose(g, 0.2)
        assert sorted(len(c) for c in part.clusters) == [8, 8]
        assert part.boundary.size == 1
        assert tuple(g.edges[part.boundary[0]]) == (0, 8)

    def test_partition_correctness(self, rng):
        for seed in range(8):
            r = np.random.default_rng(seed)
            n = int(r.integers(4, 18))
            edges = [(int(r.integers(n)), int(r.integers(n))) for _ in range(3 * n)]
            g = LoopedGraph.from_edges(n, edges, loops=np.ones(n, dtype=np.int64))
            part = decompose(g, 0.15)
            covered = np.sort(np.concatenate(part.clusters))
            assert (covered == np.arange(n)).all()
            label = part.cluster_of(n)
            expect_boundary = {
                i
                for i in range(g.edges.shape[0])
                if label[g.edges[i, 0]] != label[g.edges[i, 1]]
            }
            assert set(int(b) for b in part.boundary) == expect_boundary

    def test_small_clusters_verified_exhaustively(self, rng):
        for seed in range(6):
            r = np.random.default_rng(100 + seed)
            n = int(r.integers(6, 16))
            edges = [(int(r.integers(n)), int(r.integers(n))) for _ in range(4 * n)]
            g = LoopedGraph.from_edges(n, edges, loops=np.ones(n, dtype=np.int64))
            part = decompose(g, 0.2)
            for cl in part.clusters:
                if not 1 < cl.size <= 16:
                    continue
                local = np.full(n, -1, dtype=np.int64)
                local[cl] = np.arange(cl.size)
                sel = (local[g.edges[:, 0]] >= 0) & (local[g.edges[:, 1]] >= 0)
                eu = local[g.edges[sel, 0]]
                ev = local[g.edges[sel, 1]]
                deg = 2 * g.loops[cl]
                if eu.size:
                    deg = deg + np.bincount(
                        np.concatenate([eu, ev]), minlength=cl.size
                    )
                best, _ = _exact_enum_numpy(deg, eu, ev)
                assert best >= part.phi / part.slack - 1e-12

    def test_phi_validation(self):
        g = LoopedGraph.from_edges(2, [(0, 1)])
        with pytest.raises(InputError):
            decompose(g, 0.0)
        with pytest.raises(InputError):
            decompose(g, 1.0)


class TestSelfLoops:
    def test_zero_is_identity(self):
        g = LoopedGraph.from_edges(3, [(0, 1), (1, 2)])
        g2 = add_self_loops(g, 0)
        assert (g2.loops == g.loops).all()

    def test_loop_padding_arithmetic(self):
        edges = [(i, (i + 1) % 10) for i in range(10)]
        edges += [(i, (i + 3) % 10) for i in range(10)]
        edges += [(0, 5), (1, 6), (2, 7), (3, 8), (4, 9)]
        g = LoopedGraph.from_edges(10, edges)
        assert g.edge_count() == 25
        g2 = add_self_loops(g, 3)
        for v in range(10):
            assert volume(g2, [v]) - volume(g, [v]) == 6

    def test_loops_never_in_boundary(self, rng):
        n = 12
        edges = [(int(rng.integers(n)), int(rng.integers(n))) for _ in range(30)]
        g = LoopedGraph.from_edges(n, edges)
        g = add_self_loops(g, 2)
        part = decompose(g, 0.3)
        # boundary indexes the non-loop edge list only, loops are untouchable
        assert all(g.edges[i, 0] != g.edges[i, 1] for i in part.boundary)

    def test_negative_rejected(self):
        g = LoopedGraph.from_edges(2, [(0, 1)])
        with pytest.raises(InputError):
            add_self_loops(g, -1)
