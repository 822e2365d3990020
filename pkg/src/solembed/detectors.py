"""The three analyses: corpus clone detection, bug scanning, validation.

All three are read-only over store snapshots. Snapshots for one report are
taken at a single corpus version, so reports produced during a concurrent
ingest batch reflect either the pre- or post-batch corpus, never a mix.
Zero-vector (degenerate) fragments never participate in clone pairs or
bug hits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fragments import GRANULARITIES, extract_fragments
from .lexer import Diagnostic
from .parser import SourceUnit, parse
from .embedding import embed_fragment
from .similarity import MatrixSnapshot, Thresholds, batch_query, cached_snapshot
from .store import Store


@dataclass(frozen=True)
class ClonePair:
    fragment_a: str  # a < b by id order
    fragment_b: str
    score: float
    exact: bool  # stream digests equal


@dataclass(frozen=True)
class CloneReport:
    granularity: str
    clone_threshold: float
    corpus_version: int
    pairs: tuple[ClonePair, ...]
    clusters: tuple[tuple[str, ...], ...]
    clone_ratio: float

    def to_dict(self) -> dict:
        return {
            "granularity": self.granularity,
            "clone_threshold": self.clone_threshold,
            "corpus_version": self.corpus_version,
            "pairs": [{"fragment_a": p.fragment_a, "fragment_b": p.fragment_b,
                       "score": p.score, "exact": p.exact} for p in self.pairs],
            "clusters": [list(c) for c in self.clusters],
            "clone_ratio": self.clone_ratio,
        }


@dataclass(frozen=True)
class BugHit:
    fragment_id: str
    source_id: str
    span: tuple[int, int, int, int]
    bug_id: str
    category: str
    score: float
    enclosing_function: str | None = None
    enclosing_contract: str | None = None

    def to_dict(self) -> dict:
        return {
            "fragment_id": self.fragment_id,
            "source_id": self.source_id,
            "span": list(self.span),
            "bug_id": self.bug_id,
            "category": self.category,
            "score": self.score,
            "enclosing_function": self.enclosing_function,
            "enclosing_contract": self.enclosing_contract,
        }


@dataclass(frozen=True)
class CloneHit:
    """One corpus match for a fragment of the submitted contract."""

    query_span: tuple[int, int, int, int]
    target_fragment_id: str
    target_source_id: str
    score: float

    def to_dict(self) -> dict:
        return {
            "query_span": list(self.query_span),
            "target_fragment_id": self.target_fragment_id,
            "target_source_id": self.target_source_id,
            "score": self.score,
        }


@dataclass(frozen=True)
class ValidationBugHit:
    span: tuple[int, int, int, int]  # statement span in the submitted source
    bug_id: str
    category: str
    score: float
    description: str = ""

    def to_dict(self) -> dict:
        return {
            "span": list(self.span),
            "bug_id": self.bug_id,
            "category": self.category,
            "score": self.score,
            "description": self.description,
        }


@dataclass(frozen=True)
class ValidationReport:
    diagnostics: tuple[Diagnostic, ...]
    clone_hits: dict[str, tuple[CloneHit, ...]]  # granularity -> hits
    bug_hits: tuple[ValidationBugHit, ...]
    oov_rate: float
    corpus_version: int
    clone_threshold: float = field(default=0.95)
    bug_threshold: float = field(default=0.90)

    def to_dict(self) -> dict:
        return {
            "diagnostics": [{"severity": d.severity, "message": d.message,
                             "line": d.line, "col": d.col}
                            for d in self.diagnostics],
            "clone_hits": {g: [h.to_dict() for h in hits]
                           for g, hits in self.clone_hits.items()},
            "bug_hits": [h.to_dict() for h in self.bug_hits],
            "oov_rate": self.oov_rate,
            "corpus_version": self.corpus_version,
            "clone_threshold": self.clone_threshold,
            "bug_threshold": self.bug_threshold,
        }


class _UnionFind:
    def __init__(self):
        self._parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        parent = self._parent.setdefault(x, x)
        if parent != x:
            parent = self._parent[x] = self.find(parent)
        return parent

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self._parent[max(ra, rb)] = min(ra, rb)


def _clusters_of(pairs) -> tuple[tuple[str, ...], ...]:
    uf = _UnionFind()
    for pair in pairs:
        uf.union(pair.fragment_a, pair.fragment_b)
    groups: dict[str, list[str]] = {}
    for member in uf._parent:
        groups.setdefault(uf.find(member), []).append(member)
    clusters = [tuple(sorted(members)) for members in groups.values()]
    clusters.sort(key=lambda c: c[0])
    return tuple(clusters)


def _consistent_snapshots(store: Store, granularities, include_bugs: bool,
                          cache=None):
    """Snapshots of several matrices taken at one corpus version."""
    while True:
        version = store.version
        snapshots = {g: cached_snapshot(store, g, cache) for g in granularities}
        bug_snapshot = store.bug_snapshot() if include_bugs else None
        taken = [s.version for s in snapshots.values()]
        if bug_snapshot is not None:
            taken.append(bug_snapshot.version)
        if all(v == version for v in taken) and store.version == version:
            return version, snapshots, bug_snapshot


def detect_corpus_clones(store: Store, granularity: str,
                         clone_threshold: float = 0.95,
                         cache=None) -> CloneReport:
    """All fragment pairs scoring >= the threshold at one granularity.

    Exact duplicates (equal normalized-stream digests) come from the exact
    index without vector math; the rest from the matrix scored against
    itself, self-pairs and degenerate fragments excluded.
    """
    if not 0.0 < clone_threshold <= 1.0:
        raise ValueError(f"clone threshold must be in (0, 1], "
                         f"got {clone_threshold}")
    version, snapshots, _ = _consistent_snapshots(
        store, [granularity], include_bugs=False, cache=cache)
    snapshot = snapshots[granularity]
    records = store.fragment_records(granularity)
    degenerate_ids = {r.fragment_id for r in records if r.degenerate}
    digest_of = {r.fragment_id: r.digest for r in records}

    pairs: list[ClonePair] = []
    seen: set[tuple[str, str]] = set()

    for digest, members in sorted(store.exact_groups(granularity).items()):
        alive = [m for m in members if m not in degenerate_ids]
        for i in range(len(alive)):
            for j in range(i + 1, len(alive)):
                a, b = sorted((alive[i], alive[j]))
                pairs.append(ClonePair(a, b, score=1.0, exact=True))
                seen.add((a, b))

    if len(snapshot) > 0:
        keep = np.nonzero(~snapshot.degenerate)[0]
        queries = snapshot.rows[keep]
        hits_per_query = batch_query(
            queries, snapshot, clone_threshold,
            exclude_row_for_query=lambda qi: int(keep[qi]))
        for qi, hits in enumerate(hits_per_query):
            row_a = int(keep[qi])
            id_a = snapshot.ids[row_a]
            for hit in hits:
                if hit.row <= row_a or snapshot.degenerate[hit.row]:
                    continue  # count each unordered pair once
                a, b = sorted((id_a, hit.target_id))
                if (a, b) in seen or digest_of[a] == digest_of[b]:
                    continue
                seen.add((a, b))
                pairs.append(ClonePair(a, b, score=hit.score, exact=False))

    pairs.sort(key=lambda p: (-p.score, p.fragment_a, p.fragment_b))
    in_pairs = {p.fragment_a for p in pairs} | {p.fragment_b for p in pairs}
    population = len(records) - len(degenerate_ids)
    ratio = len(in_pairs) / population if population else 0.0
    return CloneReport(granularity=granularity,
                       clone_threshold=clone_threshold,
                       corpus_version=version, pairs=tuple(pairs),
                       clusters=_clusters_of(pairs), clone_ratio=ratio)


def detect_corpus_bugs(store: Store, bug_threshold: float = 0.90,
                       cache=None) -> list[BugHit]:
    """Corpus statements scoring >= the threshold against any bug statement."""
    if not 0.0 < bug_threshold <= 1.0:
        raise ValueError(f"bug threshold must be in (0, 1], got {bug_threshold}")
    _, snapshots, bug_snapshot = _consistent_snapshots(
        store, ["statement"], include_bugs=True, cache=cache)
    statements = snapshots["statement"]
    if len(bug_snapshot) == 0 or len(statements) == 0:
        return []

    meta = []  # row order of the bug matrix: records in order, then streams
    for record in store.bug_records:
        for idx in range(len(record.statement_streams)):
            meta.append((record.bug_id, idx, record.category))

    hits_per_bug_row = batch_query(bug_snapshot.rows, statements, bug_threshold)
    out: list[BugHit] = []
    for bug_row, hits in enumerate(hits_per_bug_row):
        bug_id, _idx, category = meta[bug_row]
        for hit in hits:
            if statements.degenerate[hit.row]:
                continue
            record = store.fragment_record(hit.target_id)
            chain = store.enclosing_chain(hit.target_id)
            function_id = next((r.fragment_id for r in chain
                                if r.granularity == "function"), None)
            contract_id = next((r.fragment_id for r in chain
                                if r.granularity == "contract"), None)
            out.append(BugHit(
                fragment_id=record.fragment_id, source_id=record.source_id,
                span=record.span, bug_id=bug_id, category=category,
                score=hit.score, enclosing_function=function_id,
                enclosing_contract=contract_id))
    out.sort(key=lambda h: (h.bug_id, -h.score, h.fragment_id))
    return out


def validate_contract(source_text: str, store: Store,
                      thresholds: Thresholds = Thresholds(),
                      top_k: int = 5, cache=None) -> ValidationReport:
    """Parse, embed and score one submitted contract against the corpus.

    Never raises on bad input: parse problems surface as diagnostics and
    whatever fragments were recovered are still analyzed.
    """
    unit = SourceUnit.from_text(source_text, path="<submission>")
    root, diagnostics = parse(unit)
    fragments = extract_fragments(root, unit.id)
    vectors = [embed_fragment(f, store.table) for f in fragments]

    token_total = 0
    oov_total = 0
    for frag, vec in zip(fragments, vectors):
        if frag.granularity == "contract":  # counts every analyzed token once
            token_total += vec.token_count
            oov_total += vec.oov_count
    oov_rate = oov_total / token_total if token_total else 0.0

    version, snapshots, bug_snapshot = _consistent_snapshots(
        store, list(GRANULARITIES), include_bugs=True, cache=cache)

    clone_hits: dict[str, tuple[CloneHit, ...]] = {}
    for granularity in GRANULARITIES:
        corpus = snapshots[granularity]
        queries = [(f, v) for f, v in zip(fragments, vectors)
                   if f.granularity == granularity and not v.is_degenerate]
        hits: list[CloneHit] = []
        if queries and len(corpus) > 0:
            matrix = np.vstack([v.vector for _, v in queries])
            per_query = batch_query(matrix, corpus, thresholds.clone_threshold,
                                    limit=top_k)
            for (frag, _vec), query_hits in zip(queries, per_query):
                for hit in query_hits:
                    if corpus.degenerate[hit.row]:
                        continue
                    record = store.fragment_record(hit.target_id)
                    hits.append(CloneHit(
                        query_span=frag.span,
                        target_fragment_id=hit.target_id,
                        target_source_id=record.source_id, score=hit.score))
        clone_hits[granularity] = tuple(hits)

    bug_hits: list[ValidationBugHit] = []
    statement_queries = [(f, v) for f, v in zip(fragments, vectors)
                         if f.granularity == "statement" and not v.is_degenerate]
    if statement_queries and len(bug_snapshot) > 0:
        meta = []
        descriptions = {}
        for record in store.bug_records:
            descriptions[record.bug_id] = record.description
            for idx in range(len(record.statement_streams)):
                meta.append((record.bug_id, record.category))
        matrix = np.vstack([v.vector for _, v in statement_queries])
        per_query = batch_query(matrix, bug_snapshot, thresholds.bug_threshold)
        for (frag, _vec), query_hits in zip(statement_queries, per_query):
            for hit in query_hits:
                bug_id, category = meta[hit.row]
                bug_hits.append(ValidationBugHit(
                    span=frag.span, bug_id=bug_id, category=category,
                    score=hit.score, description=descriptions[bug_id]))

    return ValidationReport(
        diagnostics=tuple(diagnostics), clone_hits=clone_hits,
        bug_hits=tuple(bug_hits), oov_rate=oov_rate, corpus_version=version,
        clone_threshold=thresholds.clone_threshold,
        bug_threshold=thresholds.bug_threshold)
