import numpy as np
import pytest

from element import (EmptyGraph, EmptyInput, InvalidArgument, ParseError,
                     SearchConfig, brute_force_knn, gnns_search,
                     gnns_search_batch, graph_insert, graph_load, graph_new,
                     graph_save, recall_at_k)
from element.synthetic import episodic_walk, walk_queries

CFG = SearchConfig(r1=20, r2=20, depth=2)


def build(points, k=3, seed=7, cfg=CFG):
    g = graph_new(k, seed)
    for p in points:
        graph_insert(g, p, cfg)
    return g


def reference_search(g, query, cfg):
    """Step-synchronized greedy descent, written independently of the
    vectorized implementation (plain dict/loop bookkeeping)."""
    k = g.k
    n = len(g)
    pts = g.points()
    q = np.asarray(query, dtype=np.float64)
    if n <= k:
        d2 = np.einsum("ij,ij->i", pts - q, pts - q)
        order = np.lexsort((np.arange(n), d2))
        return [(int(i), float(np.sqrt(d2[i]))) for i in order]
    budget = cfg.r1 * cfg.r2 * k + k
    starts = g._start_nodes(q, cfg.r2)
    diff = pts[starts] - q
    start_d2 = np.einsum("ij,ij->i", diff, diff)
    cur = list(starts)
    cur_d2 = list(start_d2)
    active = [True] * cfg.r2
    touched = cfg.r2
    cands = {}
    for s, d in zip(starts.tolist(), start_d2.tolist()):
        cands.setdefault(s, d)
    descents = {i: [cur_d2[i]] for i in range(cfg.r2)}
    for _ in range(cfg.r1):
        rows = [i for i in range(cfg.r2) if active[i]]
        if not rows:
            break
        if touched + len(rows) * k > budget:
            allowed = max(0, (budget - touched) // k)
            for i in rows[allowed:]:
                active[i] = False
            rows = rows[:allowed]
            if not rows:
                break
        for i in rows:
            nb = [e for e, _ in g.node(cur[i]).out_edges]
            diff = pts[nb] - q
            d2 = np.einsum("ij,ij->i", diff, diff)
            touched += k
            for e, d in zip(nb, d2.tolist()):
                cands.setdefault(e, d)
            j = int(np.argmin(d2))
            if d2[j] < cur_d2[i]:
                cur[i] = nb[j]
                cur_d2[i] = float(d2[j])
                descents[i].append(cur_d2[i])
            else:
                active[i] = False
    order = sorted(cands, key=lambda e: (cands[e], e))[:k]
    result = [(int(e), float(np.sqrt(cands[e]))) for e in order]
    return result, touched, descents


class TestConstruction:
    def test_new_graph_empty(self):
        g = graph_new(3, 0)
        assert len(g) == 0

    def test_k_zero_rejected(self):
        with pytest.raises(InvalidArgument):
            graph_new(0, 0)

    def test_insert_into_empty(self):
        g = graph_new(3, 0)
        assert graph_insert(g, np.array([1.0, 2.0]), CFG) == 0
        assert g.node(0).out_edges == []

    def test_complete_phase_exact(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0]])
        g = build(pts, k=3)
        for i in range(4):
            edges = g.node(i).out_edges
            assert len(edges) == 3
            assert {j for j, _ in edges} == set(range(4)) - {i}
            for j, dist in edges:
                assert dist == pytest.approx(float(np.linalg.norm(pts[i] - pts[j])),
                                             abs=1e-12)

    def test_degree_invariant_beyond_k(self):
        pts = episodic_walk(200, 2, 5)
        g = build(pts)
        assert all(len(g.node(i).out_edges) == 3 for i in range(len(g)))

    def test_edges_sorted_and_distinct(self):
        pts = episodic_walk(300, 2, 6)
        g = build(pts)
        for i in range(len(g)):
            edges = g.node(i).out_edges
            ids = [j for j, _ in edges]
            assert len(set(ids)) == len(ids)
            assert i not in ids
            assert edges == sorted(edges, key=lambda e: (e[1], e[0]))

    def test_edge_distances_recomputable(self):
        pts = episodic_walk(400, 3, 8)
        g = build(pts)
        for i in range(0, len(g), 7):
            node = g.node(i)
            for j, dist in node.out_edges:
                true = float(np.linalg.norm(node.point - g.node(j).point))
                assert abs(true - dist) <= 1e-12

    def test_deterministic_build(self):
        pts = episodic_walk(150, 2, 9)
        a = build(pts, seed=4)
        b = build(pts, seed=4)
        assert all(a.node(i).out_edges == b.node(i).out_edges for i in range(len(a)))

    def test_dimension_mismatch_rejected(self):
        g = build(np.zeros((1, 2)))
        with pytest.raises(InvalidArgument):
            graph_insert(g, np.zeros(3), CFG)

    def test_duplicate_points_allowed(self):
        pts = np.zeros((10, 2))
        g = build(pts)
        assert len(g) == 10
        assert all(d == 0.0 for _, d in g.node(5).out_edges)


class TestSearch:
    def test_empty_graph_rejected(self):
        with pytest.raises(EmptyGraph):
            gnns_search(graph_new(3, 0), np.zeros(2), CFG)

    def test_single_node(self):
        g = build(np.array([[1.0, 1.0]]))
        got = gnns_search(g, np.array([4.0, 5.0]), CFG)
        assert got == [(0, pytest.approx(5.0, abs=1e-12))]

    def test_small_graph_brute_force_order(self):
        pts = np.array([[0.0], [10.0], [20.0]])
        g = build(pts, k=3)
        got = gnns_search(g, np.array([12.0]), CFG)
        assert [i for i, _ in got] == [1, 2, 0]

    def test_matches_reference_implementation(self):
        rng = np.random.default_rng(12)
        for dim in (2, 4):
            pts = episodic_walk(500, dim, int(rng.integers(1000)))
            g = build(pts, seed=3)
            for _ in range(20):
                q = pts[rng.integers(0, 500)] + 0.3 * rng.standard_normal(dim)
                expected, _, _ = reference_search(g, q, CFG)
                got = gnns_search(g, q, CFG)
                assert got == expected

    def test_monotone_descent(self):
        pts = episodic_walk(400, 2, 21)
        g = build(pts)
        rng = np.random.default_rng(3)
        for _ in range(10):
            q = pts[rng.integers(0, 400)] + 0.5 * rng.standard_normal(2)
            _, _, descents = reference_search(g, q, CFG)
            for trace in descents.values():
                assert all(b <= a for a, b in zip(trace, trace[1:]))

    def test_touched_bound(self):
        pts = episodic_walk(2000, 2, 31)
        g = build(pts)
        queries = walk_queries(pts, 100, 5)
        _, touched = gnns_search_batch(g, queries, CFG, return_touched=True)
        assert np.all(touched <= CFG.r1 * CFG.r2 * g.k + g.k)

    def test_search_distances_exact_and_sound(self):
        pts = episodic_walk(600, 2, 41)
        g = build(pts)
        rng = np.random.default_rng(6)
        for _ in range(10):
            q = pts[rng.integers(0, 600)] + 0.2 * rng.standard_normal(2)
            true_nn = brute_force_knn(g.points(), q, 1)[0][1]
            for node_id, dist in gnns_search(g, q, CFG):
                assert dist == pytest.approx(
                    float(np.linalg.norm(g.node(node_id).point - q)), abs=1e-12)
                assert dist >= true_nn - 1e-12

    def test_batch_matches_single(self):
        pts = episodic_walk(300, 2, 51)
        g = build(pts)
        queries = walk_queries(pts, 16, 6)
        batch = gnns_search_batch(g, queries, CFG)
        for i in range(16):
            single = gnns_search(g, queries[i], CFG)
            assert [(int(a), float(b)) for a, b in
                    zip(batch[i][0], batch[i][1])] == single


class TestBruteForce:
    def test_query_on_point(self):
        pts = np.array([[0.0], [3.0], [7.0]])
        got = brute_force_knn(pts, np.array([3.0]), 2)
        assert got[0] == (1, 0.0)

    def test_documented_example(self):
        got = brute_force_knn(np.array([[0.0], [10.0], [20.0]]), np.array([12.0]), 2)
        assert got == [(1, pytest.approx(2.0)), (2, pytest.approx(8.0))]

    def test_permutation_invariant_as_set(self):
        rng = np.random.default_rng(8)
        pts = rng.normal(size=(500, 3))
        q = rng.normal(size=3)
        base = {i for i, _ in brute_force_knn(pts, q, 5)}
        perm = rng.permutation(500)
        mapped = {int(perm[i]) for i, _ in brute_force_knn(pts[np.argsort(perm)], q, 5)}
        # relabel: point j in the permuted array sits at position argsort(perm)[j]
        inv = np.argsort(perm)
        got = {i for i, _ in brute_force_knn(pts[inv], q, 5)}
        assert {int(inv[i]) for i in got} == base

    def test_empty_rejected(self):
        with pytest.raises(EmptyInput):
            brute_force_knn(np.empty((0, 2)), np.zeros(2), 1)

    def test_ties_by_index(self):
        pts = np.array([[1.0], [1.0], [1.0], [1.0]])
        got = brute_force_knn(pts, np.array([1.0]), 2)
        assert [i for i, _ in got] == [0, 1]


class TestRecall:
    def test_small_graph_perfect(self):
        pts = episodic_walk(3, 2, 1)
        g = build(pts, k=5)
        assert recall_at_k(g, walk_queries(pts, 10, 2), CFG) == 1.0

    def test_exhaustive_regime_perfect(self):
        pts = episodic_walk(50, 2, 61)
        g = build(pts)
        assert recall_at_k(g, walk_queries(pts, 30, 3), CFG) == 1.0

    def test_reproducible(self):
        pts = episodic_walk(800, 2, 71)
        queries = walk_queries(pts, 50, 4)
        a = recall_at_k(build(pts, seed=2), queries, CFG)
        b = recall_at_k(build(pts, seed=2), queries, CFG)
        assert a == b

    def test_empty_queries_rejected(self):
        g = build(episodic_walk(10, 2, 1))
        with pytest.raises(EmptyInput):
            recall_at_k(g, np.empty((0, 2)), CFG)


class TestSerialization:
    def test_empty_roundtrip(self):
        g = graph_new(3, 0)
        g2 = graph_load(graph_save(g))
        assert len(g2) == 0 and g2.k == 3

    def test_large_roundtrip(self):
        pts = episodic_walk(1000, 2, 81)
        g = build(pts)
        g2 = graph_load(graph_save(g), seed=g.rng_seed)
        assert len(g2) == len(g)
        for i in range(len(g)):
            assert g.node(i).out_edges == g2.node(i).out_edges
            assert np.array_equal(g.node(i).point, g2.node(i).point)

    def test_loaded_graph_searchable(self):
        pts = episodic_walk(200, 2, 91)
        g = build(pts, seed=5)
        g2 = graph_load(graph_save(g), seed=5)
        q = pts[17] + 0.1
        assert gnns_search(g, q, CFG) == gnns_search(g2, q, CFG)

    def test_truncated_rejected(self):
        blob = graph_save(build(episodic_walk(20, 2, 3)))
        with pytest.raises(ParseError):
            graph_load(blob[:-7])

    def test_bad_magic_rejected(self):
        blob = graph_save(graph_new(2, 0))
        with pytest.raises(ParseError) as err:
            graph_load(b"XXXX" + blob[4:])
        assert err.value.offset == 0


class TestConfig:
    @pytest.mark.parametrize("bad", [dict(r1=0), dict(r2=0), dict(depth=0)])
    def test_positive_fields(self, bad):
        with pytest.raises(InvalidArgument):
            SearchConfig(**bad)
