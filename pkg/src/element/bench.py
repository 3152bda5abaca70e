"""Lifelong-reward cost benchmark: graph search versus brute force.

Builds a graph from a synthetic walk stream and times the novelty reward at
increasing store sizes, the way training consumes it (batched queries).
Brute force scans every stored point per query, so its cost grows linearly
with the store; the graph's per-query work is bounded by r1 * r2 * k + k
distance evaluations regardless of size.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .knn_graph import KnnGraph, SearchConfig, graph_insert, graph_new
from .rewards import lifelong_rewards_batch
from .synthetic import episodic_walk, walk_queries

__all__ = ["BenchPoint", "run_bench", "bench_csv", "brute_rewards_batch"]


@dataclass(frozen=True)
class BenchPoint:
    n_points: int
    dim: int
    k: int
    r1: int
    r2: int
    graph_ms_per_query: float
    brute_ms_per_query: float
    speedup: float
    touched_max: int
    touched_bound: int
    recall: float
    build_seconds: float


def brute_rewards_batch(points: np.ndarray, queries: np.ndarray, k: int) -> np.ndarray:
    """Exact-kNN novelty over the full store, vectorized per query batch."""
    sq = np.einsum("ij,ij->i", points, points)
    out = np.empty(len(queries))
    for lo in range(0, len(queries), 128):
        hi = min(lo + 128, len(queries))
        q = queries[lo:hi]
        d2 = (np.einsum("ij,ij->i", q, q)[:, None]
              - 2.0 * (q @ points.T) + sq[None, :])
        np.maximum(d2, 0.0, out=d2)
        kth = np.partition(d2, k - 1, axis=1)[:, :k]
        out[lo:hi] = np.log(np.sqrt(kth.sum(axis=1)) + 1.0)
    return out


def _exact_recall(points: np.ndarray, queries: np.ndarray, found_ids) -> float:
    sq = np.einsum("ij,ij->i", points, points)
    total = 0.0
    k = len(found_ids[0])
    for i, q in enumerate(queries):
        d2 = sq - 2.0 * (points @ q) + q @ q
        exact = np.lexsort((np.arange(len(points)), d2))[:k]
        total += len(set(found_ids[i]) & set(exact.tolist())) / k
    return total / len(queries)


def run_bench(n_points: int, dim: int, k: int, r1: int, r2: int, *,
              seed: int = 7, n_queries: int = 1000,
              sizes: tuple[int, ...] | None = None) -> list[BenchPoint]:
    """Measure graph vs brute per-query reward cost at graph sizes up to
    ``n_points`` (default size ladder: powers of ten from 1000)."""
    from .knn_graph import gnns_search_batch

    if sizes is None:
        sizes = tuple(s for s in (1_000, 10_000, 100_000) if s <= n_points)
        if n_points not in sizes:
            sizes = sizes + (n_points,)
    cfg = SearchConfig(r1=r1, r2=r2, depth=2)
    stream = episodic_walk(max(sizes), dim, seed)
    g = graph_new(k, seed)
    results = []
    built = 0
    build_time = 0.0
    for size in sorted(sizes):
        t0 = time.perf_counter()
        for i in range(built, size):
            graph_insert(g, stream[i], cfg)
        build_time += time.perf_counter() - t0
        built = size
        points = g.points().copy()
        queries = walk_queries(points, n_queries, seed + 1)

        t0 = time.perf_counter()
        found, touched = gnns_search_batch(g, queries, cfg, return_touched=True)
        lifelong_rewards_batch(g, queries, cfg)
        graph_ms = (time.perf_counter() - t0) / 2.0 / n_queries * 1e3

        t0 = time.perf_counter()
        brute_rewards_batch(points, queries, k)
        brute_ms = (time.perf_counter() - t0) / n_queries * 1e3

        sample = queries[: min(200, n_queries)]
        recall = _exact_recall(points, sample,
                               [found[i][0].tolist() for i in range(len(sample))])
        results.append(BenchPoint(
            n_points=size, dim=dim, k=k, r1=r1, r2=r2,
            graph_ms_per_query=graph_ms, brute_ms_per_query=brute_ms,
            speedup=brute_ms / graph_ms if graph_ms > 0 else float("inf"),
            touched_max=int(touched.max()), touched_bound=r1 * r2 * k + k,
            recall=recall, build_seconds=build_time))
    return results


def bench_csv(results: list[BenchPoint], path) -> None:
    cols = ("n_points", "dim", "k", "r1", "r2", "graph_ms_per_query",
            "brute_ms_per_query", "speedup", "touched_max", "touched_bound",
            "recall", "build_seconds")
    lines = [",".join(cols)]
    for r in results:
        lines.append(",".join(
            format(getattr(r, c), ".17g") if isinstance(getattr(r, c), float)
            else str(getattr(r, c)) for c in cols))
    Path(path).write_text("\n".join(lines) + "\n")
