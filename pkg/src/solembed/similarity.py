"""Similarity scoring and batched threshold queries over embedding matrices.

The score of two vectors is 1 - |e1 - e2| / (|e1| + |e2|), which maps
identical vectors to exactly 1 and antipodal vectors to 0 (two zero
vectors count as identical). Batched queries expand the pairwise distances
as |q|^2 + |m|^2 - 2 q.m so the whole scan is a single matrix product
instead of a per-pair loop.
"""

from __future__ import annotations

import threading
import time
import weakref
from dataclasses import dataclass

import numpy as np

_QUERY_BLOCK = 512  # rows of Q scored per matmul, bounds the score buffer


@dataclass(frozen=True)
class Thresholds:
    clone_threshold: float = 0.95
    bug_threshold: float = 0.90

    def __post_init__(self):
        for name in ("clone_threshold", "bug_threshold"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {value}")


@dataclass(frozen=True)
class QueryHit:
    row: int
    target_id: str
    score: float


@dataclass(frozen=True)
class MatrixSnapshot:
    """Immutable view of one corpus matrix: rows, precomputed norms, ids."""

    granularity: str
    version: int
    rows: np.ndarray            # (N, d), read-only
    norms: np.ndarray           # (N,)
    ids: tuple[str, ...]        # row -> fragment or bug id
    degenerate: np.ndarray      # (N,) bool, zero-vector fragments

    def __len__(self) -> int:
        return self.rows.shape[0]


def similarity(e1: np.ndarray, e2: np.ndarray) -> float:
    """Normalized-Euclidean similarity in [0, 1]."""
    e1 = np.asarray(e1, dtype=np.float64)
    e2 = np.asarray(e2, dtype=np.float64)
    if e1.shape != e2.shape:
        raise ValueError(f"dimension mismatch: {e1.shape} vs {e2.shape}")
    denom = np.linalg.norm(e1) + np.linalg.norm(e2)
    if denom == 0.0:
        return 1.0
    score = 1.0 - np.linalg.norm(e1 - e2) / denom
    return float(min(1.0, max(0.0, score)))


_REFINE_BAND = 1e-6  # scores this close to 1 are recomputed directly


def score_block(queries: np.ndarray, q_norms: np.ndarray,
                snapshot: MatrixSnapshot) -> np.ndarray:
    """(q, N) score matrix via the squared-distance expansion.

    The expansion leaves ~1e-8 cancellation residue on (near-)identical
    vectors, so scores inside the refinement band are recomputed with the
    direct difference formula; identical vectors then score exactly 1.
    """
    cross = queries @ snapshot.rows.T
    sq = q_norms[:, None] ** 2 + snapshot.norms[None, :] ** 2 - 2.0 * cross
    np.maximum(sq, 0.0, out=sq)  # float cancellation can go slightly negative
    dist = np.sqrt(sq)
    denom = q_norms[:, None] + snapshot.norms[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = 1.0 - dist / denom
    scores[denom == 0.0] = 1.0  # two zero vectors are identical
    np.clip(scores, 0.0, 1.0, out=scores)
    for qi, row in np.argwhere(scores >= 1.0 - _REFINE_BAND):
        den = denom[qi, row]
        if den == 0.0:
            continue
        exact = 1.0 - np.linalg.norm(queries[qi] - snapshot.rows[row]) / den
        scores[qi, row] = min(1.0, max(0.0, exact))
    return scores


def batch_query(queries: np.ndarray, snapshot: MatrixSnapshot,
                threshold: float, limit: int | None = None,
                exclude_row_for_query=None) -> list[list[QueryHit]]:
    """Hits with score >= threshold per query, (score desc, row asc) order.

    exclude_row_for_query, when given, maps a query index to a corpus row
    whose score is suppressed (used for self-matches in corpus-vs-corpus
    scans). Results match the naive per-pair loop within 1e-6.
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if queries.shape[1] != snapshot.rows.shape[1]:
        raise ValueError(f"dimension mismatch: query d={queries.shape[1]}, "
                         f"matrix d={snapshot.rows.shape[1]}")
    if not 0.0 <= threshold <= 1.0:  # 0 means report every pair
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")

    results: list[list[QueryHit]] = []
    if len(snapshot) == 0:
        return [[] for _ in range(queries.shape[0])]

    q_norms_all = np.linalg.norm(queries, axis=1)
    for start in range(0, queries.shape[0], _QUERY_BLOCK):
        block = queries[start:start + _QUERY_BLOCK]
        scores = score_block(block, q_norms_all[start:start + _QUERY_BLOCK],
                             snapshot)
        for qi in range(block.shape[0]):
            row_scores = scores[qi]
            if exclude_row_for_query is not None:
                excluded = exclude_row_for_query(start + qi)
                if excluded is not None:
                    row_scores = row_scores.copy()
                    row_scores[excluded] = -1.0
            candidates = np.nonzero(row_scores >= threshold)[0]
            if candidates.size:
                order = np.lexsort((candidates, -row_scores[candidates]))
                candidates = candidates[order]
            if limit is not None:
                candidates = candidates[:limit]
            results.append([QueryHit(row=int(r), target_id=snapshot.ids[r],
                                     score=float(row_scores[r]))
                            for r in candidates])
    return results


def naive_query(queries: np.ndarray, snapshot: MatrixSnapshot,
                threshold: float) -> list[list[QueryHit]]:
    """Scalar per-pair loop. Benchmark baseline for the matrix kernel."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    results = []
    dim = queries.shape[1]
    for q in queries:
        hits = []
        qn = 0.0
        for j in range(dim):
            qn += q[j] * q[j]
        q_norm = qn ** 0.5
        for row in range(len(snapshot)):
            m = snapshot.rows[row]
            sq = 0.0
            mn = 0.0
            for j in range(dim):
                delta = q[j] - m[j]
                sq += delta * delta
                mn += m[j] * m[j]
            denom = q_norm + mn ** 0.5
            score = 1.0 if denom == 0.0 else 1.0 - (sq ** 0.5) / denom
            score = min(1.0, max(0.0, score))
            if score >= threshold:
                hits.append(QueryHit(row=row, target_id=snapshot.ids[row],
                                     score=score))
        hits.sort(key=lambda h: (-h.score, h.row))
        results.append(hits)
    return results


class MatrixCache:
    """Version-keyed resident copies of corpus matrices.

    A hit at the current store version returns the resident snapshot with
    no storage read; a version bump invalidates the entry. Thread-safe.
    """

    def __init__(self):
        self._entries: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()
        self._lock = threading.Lock()

    def get(self, store, granularity: str) -> MatrixSnapshot:
        version = store.version
        with self._lock:
            per_store = self._entries.get(store)
            if per_store is not None:
                cached = per_store.get(granularity)
                if cached is not None and cached.version == version:
                    return cached
        snapshot = store.snapshot_matrix(granularity)
        with self._lock:
            per_store = self._entries.setdefault(store, {})
            current = per_store.get(granularity)
            if current is None or current.version != snapshot.version:
                per_store[granularity] = snapshot
            return per_store[granularity]


_default_cache = MatrixCache()


def cached_snapshot(store, granularity: str,
                    cache: MatrixCache | None = None) -> MatrixSnapshot:
    """Resident matrix handle for (store, granularity) at its current version."""
    return (cache or _default_cache).get(store, granularity)


def run_benchmark(rows: int, dim: int, seed: int = 0,
                  naive_rows_cap: int = 2000) -> list[dict]:
    """Time one query against an N x d corpus, matrix kernel vs scalar loop.

    The scalar loop is extrapolated linearly when rows exceeds
    naive_rows_cap to keep the harness quick.
    """
    rng = np.random.default_rng(seed)
    corpus = rng.standard_normal((rows, dim))
    snapshot = MatrixSnapshot(
        granularity="bench", version=0, rows=corpus,
        norms=np.linalg.norm(corpus, axis=1),
        ids=tuple(str(i) for i in range(rows)),
        degenerate=np.zeros(rows, dtype=bool))
    query = rng.standard_normal((1, dim))

    batch_query(query, snapshot, threshold=0.5)  # warm up
    start = time.perf_counter()
    batch_query(query, snapshot, threshold=0.5)
    batch_ms = (time.perf_counter() - start) * 1000.0

    naive_rows = min(rows, naive_rows_cap)
    naive_snapshot = MatrixSnapshot(
        granularity="bench", version=0, rows=corpus[:naive_rows],
        norms=snapshot.norms[:naive_rows], ids=snapshot.ids[:naive_rows],
        degenerate=snapshot.degenerate[:naive_rows])
    start = time.perf_counter()
    naive_query(query, naive_snapshot, threshold=0.5)
    naive_ms = (time.perf_counter() - start) * 1000.0 * (rows / naive_rows)

    return [
        {"method": "batch", "rows": rows, "dim": dim, "millis": batch_ms},
        {"method": "naive", "rows": rows, "dim": dim, "millis": naive_ms},
    ]
