"""Append-only directed kNN graph with approximate search and online insert.

The graph is the lifelong state memory: every encoded state ever visited is
a node, and each node keeps out-edges to its k (approximately) nearest
stored neighbors. Search is greedy hill descent from random restarts;
insertion wires a new node through that search and then walks outward from
the found neighbors repairing edges in both directions.

Points and edges live in flat, amortized-growth numpy arrays so that both
the batched search (used for reward computation over replay batches) and
the per-insert update stay cheap at six-figure node counts. Searches are
read-only; insertion requires exclusive access (single writer, readers must
not observe a partially inserted node).
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import EmptyGraph, EmptyInput, InvalidArgument, ParseError

__all__ = [
    "SearchConfig", "GraphNode", "KnnGraph", "graph_new", "gnns_search",
    "gnns_search_batch", "graph_insert", "brute_force_knn", "recall_at_k",
    "graph_save", "graph_load",
]

_NO_EDGE = np.int64(-1)
_MAGIC = b"KNNG"
_VERSION = 1
_SENTINEL_ID = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class SearchConfig:
    """Greedy search knobs: restarts walk at most r1 hops each, r2 restarts
    per query, and inserts repair the graph up to ``depth`` hops out from
    the new node's neighbors."""

    r1: int = 20
    r2: int = 20
    depth: int = 2

    def __post_init__(self):
        for name in ("r1", "r2", "depth"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise InvalidArgument(f"{name} must be a positive integer, got {v!r}")


@dataclass(frozen=True)
class GraphNode:
    """Read-only view of one node: its point and sorted out-edges."""

    id: int
    point: np.ndarray
    out_edges: list  # [(neighbor_id, distance)], ascending by (distance, id)


class KnnGraph:
    """Directed graph over stored points; each node has at most k out-edges.

    While the graph holds at most k nodes every node links to all others
    (complete-graph bootstrap); beyond that every node has exactly k edges.
    Nodes and points are never removed.
    """

    def __init__(self, k: int, seed: int):
        if not isinstance(k, (int, np.integer)) or k < 1:
            raise InvalidArgument(f"k must be a positive integer, got {k!r}")
        self.k = int(k)
        self.rng_seed = int(seed)
        self._count = 0
        self._dim: int | None = None
        self._points: np.ndarray | None = None
        self._edge_ids = np.full((64, self.k), _NO_EDGE, dtype=np.int64)
        self._edge_dists = np.full((64, self.k), np.inf, dtype=np.float64)

    def __len__(self) -> int:
        return self._count

    @property
    def dim(self) -> int | None:
        return self._dim

    def points(self) -> np.ndarray:
        """View of all stored points, shape (len(self), dim)."""
        if self._count == 0:
            return np.empty((0, 0))
        return self._points[:self._count]

    def node(self, node_id: int) -> GraphNode:
        if not 0 <= node_id < self._count:
            raise InvalidArgument(f"no node with id {node_id}")
        ids = self._edge_ids[node_id]
        valid = ids >= 0
        edges = list(zip(ids[valid].tolist(),
                         self._edge_dists[node_id][valid].tolist()))
        return GraphNode(node_id, self._points[node_id].copy(), edges)

    def _ensure_capacity(self, dim: int):
        if self._points is None:
            self._dim = dim
            self._points = np.zeros((64, dim))
        if self._count < self._points.shape[0]:
            return
        cap = self._points.shape[0] * 2
        pts = np.zeros((cap, self._dim))
        pts[:self._count] = self._points[:self._count]
        self._points = pts
        ids = np.full((cap, self.k), _NO_EDGE, dtype=np.int64)
        ids[:self._count] = self._edge_ids[:self._count]
        self._edge_ids = ids
        dists = np.full((cap, self.k), np.inf, dtype=np.float64)
        dists[:self._count] = self._edge_dists[:self._count]
        self._edge_dists = dists

    def _set_edges(self, node_id: int, ids: np.ndarray, dists: np.ndarray):
        m = len(ids)
        order = np.lexsort((ids, dists))
        self._edge_ids[node_id, :m] = ids[order]
        self._edge_dists[node_id, :m] = dists[order]
        self._edge_ids[node_id, m:] = _NO_EDGE
        self._edge_dists[node_id, m:] = np.inf

    def _replace_longest(self, node_id: int, new_id: int, dist: float):
        # Callers guarantee dist < current longest and new_id not present.
        ids = self._edge_ids[node_id].copy()
        dists = self._edge_dists[node_id].copy()
        ids[-1] = new_id
        dists[-1] = dist
        order = np.lexsort((ids, dists))
        self._edge_ids[node_id] = ids[order]
        self._edge_dists[node_id] = dists[order]

    def _start_nodes(self, query: np.ndarray, r2: int) -> np.ndarray:
        # Restart choice is a pure function of (graph seed, node count,
        # query bytes): searches stay read-only and bit-reproducible.
        h = zlib.crc32(np.ascontiguousarray(query).tobytes())
        ss = np.random.SeedSequence(
            entropy=[self.rng_seed & 0xFFFFFFFF, self._count, h])
        rng = np.random.Generator(np.random.PCG64(ss))
        return rng.integers(0, self._count, size=r2)


def graph_new(k: int, seed: int) -> KnnGraph:
    """Empty graph with out-degree k and a seed for restart sampling."""
    return KnnGraph(k, seed)


def _check_query_matrix(g: KnnGraph, queries: np.ndarray) -> np.ndarray:
    q = np.asarray(queries, dtype=np.float64)
    if q.ndim == 1:
        q = q[None, :]
    if q.ndim != 2:
        raise InvalidArgument(f"queries must be (n, d), got shape {q.shape}")
    if g.dim is not None and q.shape[1] != g.dim:
        raise InvalidArgument(
            f"query dimension {q.shape[1]} does not match graph dimension {g.dim}")
    return q


def gnns_search_batch(g: KnnGraph, queries: np.ndarray, cfg: SearchConfig,
                      return_touched: bool = False):
    """Greedy graph search for a batch of queries.

    Per query and restart: walk from a random start node to whichever of the
    current node's out-neighbors is closest to the query, stopping as soon
    as no neighbor improves, for at most r1 hops. Every node whose distance
    got evaluated (starts, neighbors, endpoints) is a candidate; the k
    closest by (distance, id) are returned per query.

    Distance evaluations per query are hard-capped at r1*r2*k + k; the cap
    only binds in the stall-free worst case and trims the final hops.

    Returns a list of (ids, dists) ndarray pairs, plus an ndarray of
    per-query evaluation counts when ``return_touched`` is set.
    """
    if len(g) == 0:
        raise EmptyGraph("cannot search an empty graph")
    q = _check_query_matrix(g, queries)
    nq = q.shape[0]
    k = g.k
    n = len(g)
    budget = cfg.r1 * cfg.r2 * k + k
    pts = g._points

    if n <= k:
        # Complete-graph phase: brute force over all nodes.
        diff = q[:, None, :] - pts[None, :n, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        results = []
        for i in range(nq):
            order = np.lexsort((np.arange(n), d2[i]))
            results.append((order.astype(np.int64), np.sqrt(d2[i][order])))
        touched = np.full(nq, n, dtype=np.int64)
        return (results, touched) if return_touched else results

    starts = np.stack([g._start_nodes(q[i], cfg.r2) for i in range(nq)])
    cur = starts.reshape(-1)
    qid = np.repeat(np.arange(nq), cfg.r2)
    diff0 = pts[cur] - q[qid]
    cur_d2 = np.einsum("ij,ij->i", diff0, diff0)
    active = np.ones(nq * cfg.r2, dtype=bool)
    touched = np.full(nq, cfg.r2, dtype=np.int64)
    cand_q = [qid.copy()]
    cand_i = [cur.copy()]
    cand_d = [cur_d2.copy()]

    edge_ids = g._edge_ids
    for _ in range(cfg.r1):
        rows = np.nonzero(active)[0]
        if rows.size == 0:
            break
        # Enforce the per-query evaluation budget (rarely binding).
        need = np.bincount(qid[rows], minlength=nq) * k
        over = np.nonzero(touched + need > budget)[0]
        if over.size:
            keep = np.ones(rows.size, dtype=bool)
            for qi in over:
                allowed = max(0, (budget - touched[qi]) // k)
                mine = np.nonzero(qid[rows] == qi)[0]
                drop = mine[allowed:]
                keep[drop] = False
                active[rows[drop]] = False
            rows = rows[keep]
            if rows.size == 0:
                break
        nb = edge_ids[cur[rows]]                      # (m, k)
        diff = pts[nb] - q[qid[rows]][:, None, :]     # (m, k, d)
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        np.add.at(touched, qid[rows], k)
        cand_q.append(np.repeat(qid[rows], k))
        cand_i.append(nb.reshape(-1))
        cand_d.append(d2.reshape(-1))
        best = np.argmin(d2, axis=1)
        best_d2 = d2[np.arange(rows.size), best]
        improved = best_d2 < cur_d2[rows]
        moved = rows[improved]
        cur[moved] = nb[improved, best[improved]]
        cur_d2[moved] = best_d2[improved]
        active[rows[~improved]] = False

    bq = np.concatenate(cand_q)
    bi = np.concatenate(cand_i)
    bd = np.concatenate(cand_d)
    order = np.lexsort((bi, bd, bq))
    bq, bi, bd = bq[order], bi[order], bd[order]
    bounds = np.searchsorted(bq, np.arange(nq + 1))
    results = []
    for i in range(nq):
        ids = bi[bounds[i]:bounds[i + 1]]
        d2s = bd[bounds[i]:bounds[i + 1]]
        _, first = np.unique(ids, return_index=True)
        ids, d2s = ids[first], d2s[first]
        top = np.lexsort((ids, d2s))[:k]
        results.append((ids[top], np.sqrt(d2s[top])))
    return (results, touched) if return_touched else results


def gnns_search(g: KnnGraph, query, cfg: SearchConfig) -> list:
    """Single-query search; returns [(id, distance)] ascending, ties by id."""
    (ids, dists), = gnns_search_batch(g, np.asarray(query, dtype=np.float64), cfg)
    return list(zip(ids.tolist(), dists.tolist()))


def graph_insert(g: KnnGraph, point, cfg: SearchConfig) -> int:
    """Insert a point; returns its node id.

    With at most k stored nodes the new node is wired to every existing node
    and vice versa (exact complete graph). Afterwards the new node's k
    approximate neighbors come from ``gnns_search``, and an outward
    breadth-first walk from those neighbors (up to ``cfg.depth`` hops,
    each node visited once) repairs the graph: a visited node closer to the
    new point than its current longest edge adopts the new node, and any
    visited node closer than the new node's own longest edge replaces it.
    """
    p = np.asarray(point, dtype=np.float64)
    if p.ndim != 1:
        raise InvalidArgument(f"point must be a 1-d vector, got shape {p.shape}")
    if g.dim is not None and p.shape[0] != g.dim:
        raise InvalidArgument(
            f"point dimension {p.shape[0]} does not match graph dimension {g.dim}")
    g._ensure_capacity(p.shape[0])
    new_id = len(g)
    n = new_id

    if n == 0:
        g._points[0] = p
        g._count = 1
        return 0

    if n <= g.k:
        # Complete-graph bootstrap: connect both ways to every existing node.
        diff = g._points[:n] - p
        dists = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        g._points[new_id] = p
        g._count = n + 1
        g._set_edges(new_id, np.arange(n, dtype=np.int64), dists)
        for j in range(n):
            ids = g._edge_ids[j]
            m = int((ids >= 0).sum())
            cur_ids = np.append(ids[:m], np.int64(new_id))
            cur_dists = np.append(g._edge_dists[j][:m], dists[j])
            g._set_edges(j, cur_ids, cur_dists)
        return new_id

    found = gnns_search_batch(g, p[None, :], cfg)[0]
    ids, dists = found
    g._points[new_id] = p
    g._count = n + 1
    g._set_edges(new_id, ids.astype(np.int64), dists)

    visited = set(ids.tolist())
    visited.add(new_id)
    frontier = ids.astype(np.int64)
    for hop in range(cfg.depth + 1):
        if frontier.size == 0:
            break
        diff = g._points[frontier] - p
        fdists = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        for x, dx in zip(frontier.tolist(), fdists.tolist()):
            if dx < g._edge_dists[x, g.k - 1]:
                g._replace_longest(x, new_id, dx)
        own = set(g._edge_ids[new_id].tolist())
        for x, dx in zip(frontier.tolist(), fdists.tolist()):
            if dx < g._edge_dists[new_id, g.k - 1] and x not in own:
                own.discard(int(g._edge_ids[new_id, g.k - 1]))
                g._replace_longest(new_id, x, dx)
                own.add(x)
        if hop == cfg.depth:
            break
        nxt = np.unique(g._edge_ids[frontier].reshape(-1))
        nxt = nxt[nxt >= 0]
        fresh = [v for v in nxt.tolist() if v not in visited]
        visited.update(fresh)
        frontier = np.asarray(fresh, dtype=np.int64)
    return new_id


def brute_force_knn(points, query, k: int) -> list:
    """Exact k nearest neighbors by Euclidean distance, ties by index."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        raise EmptyInput("points must be nonempty")
    if pts.ndim == 1:
        pts = pts[:, None]
    if k < 1:
        raise InvalidArgument(f"k must be >= 1, got {k}")
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.shape[0] != pts.shape[1]:
        raise InvalidArgument(
            f"query dimension {q.shape[0]} does not match points dimension {pts.shape[1]}")
    diff = pts - q
    d2 = np.einsum("ij,ij->i", diff, diff)
    order = np.lexsort((np.arange(len(pts)), d2))[:k]
    return [(int(i), float(np.sqrt(d2[i]))) for i in order]


def recall_at_k(g: KnnGraph, queries, cfg: SearchConfig) -> float:
    """Mean fraction of exact nearest neighbors recovered per query."""
    if len(g) == 0:
        raise EmptyGraph("cannot evaluate recall on an empty graph")
    q = _check_query_matrix(g, queries)
    if q.shape[0] == 0:
        raise EmptyInput("queries must be nonempty")
    k_eff = min(g.k, len(g))
    results = gnns_search_batch(g, q, cfg)
    pts = g.points()
    sq = np.einsum("ij,ij->i", pts, pts)
    total = 0.0
    for i in range(q.shape[0]):
        d2 = sq - 2.0 * (pts @ q[i]) + q[i] @ q[i]
        exact = np.lexsort((np.arange(len(pts)), d2))[:k_eff]
        got = set(results[i][0].tolist())
        total += len(got & set(exact.tolist())) / k_eff
    return total / q.shape[0]


_HEADER = struct.Struct("<4sHIQI")
_EDGE = struct.Struct("<Qd")


def graph_save(g: KnnGraph) -> bytes:
    """Serialize to bytes: header (magic, version, k, count, dim), then per
    node its id, float64 coordinates, and exactly k (id, distance) edge
    pairs, absent edges padded with a sentinel id. Little-endian."""
    dim = g.dim if g.dim is not None else 0
    out = [_HEADER.pack(_MAGIC, _VERSION, g.k, len(g), dim)]
    for i in range(len(g)):
        out.append(struct.pack("<Q", i))
        out.append(g._points[i].astype("<f8").tobytes())
        ids = g._edge_ids[i]
        dists = g._edge_dists[i]
        for j in range(g.k):
            if ids[j] >= 0:
                out.append(_EDGE.pack(int(ids[j]), float(dists[j])))
            else:
                out.append(_EDGE.pack(_SENTINEL_ID, float("inf")))
    return b"".join(out)


def graph_load(data: bytes, seed: int = 0) -> KnnGraph:
    """Inverse of :func:`graph_save`. The restart seed is not serialized;
    pass one when reproducible searches against the loaded graph matter."""
    if len(data) < _HEADER.size:
        raise ParseError("truncated header", offset=len(data))
    magic, version, k, count, dim = _HEADER.unpack_from(data, 0)
    if magic != _MAGIC:
        raise ParseError(f"bad magic {magic!r}", offset=0)
    if version != _VERSION:
        raise ParseError(f"unsupported version {version}", offset=4)
    if k < 1:
        raise ParseError(f"invalid k {k}", offset=6)
    g = KnnGraph(k, seed)
    node_size = 8 + dim * 8 + k * _EDGE.size
    expected = _HEADER.size + count * node_size
    if len(data) != expected:
        raise ParseError(
            f"expected {expected} bytes for {count} nodes, got {len(data)}",
            offset=min(len(data), expected))
    off = _HEADER.size
    for i in range(count):
        (node_id,) = struct.unpack_from("<Q", data, off)
        if node_id != i:
            raise ParseError(f"node id {node_id} out of order (expected {i})",
                             offset=off)
        off += 8
        point = np.frombuffer(data, dtype="<f8", count=dim, offset=off).copy()
        off += dim * 8
        g._ensure_capacity(dim)
        g._points[i] = point
        ids = []
        dists = []
        for _ in range(k):
            eid, edist = _EDGE.unpack_from(data, off)
            off += _EDGE.size
            if eid != _SENTINEL_ID:
                if eid >= count:
                    raise ParseError(f"edge target {eid} out of range",
                                     offset=off - _EDGE.size)
                ids.append(eid)
                dists.append(edist)
        g._count = i + 1
        g._set_edges(i, np.asarray(ids, dtype=np.int64),
                     np.asarray(dists, dtype=np.float64))
    g._count = count
    return g
