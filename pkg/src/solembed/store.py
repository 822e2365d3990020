"""Corpus store: embedding matrices, exact-match index, bug records.

Holds one matrix per fragment granularity plus the bug statement matrix,
all tied to a frozen embedding table. Single writer, many readers:
mutations happen under a lock and bump a version counter once per batch;
readers take immutable MatrixSnapshot views and are never blocked.

Snapshot directory layout (all UTF-8 text):
    manifest.json       versions, counts, dim, sources
    embeddings.txt      token vectors, word2vec text convention
    fragments.jsonl     one fragment record per line (no streams, digests only)
    matrix_<g>.txt      one row of floats per fragment, per granularity
    bugs.json           array of bug records with normalized statement streams
"""

from __future__ import annotations

import json
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedding import EmbeddingTable, FragmentVector, embed_stream
from .fragments import GRANULARITIES, Fragment, stream_digest
from .parser import SourceUnit
from .similarity import MatrixSnapshot

SNAPSHOT_FORMAT_VERSION = 1

DEFAULT_BUG_CATEGORIES = (
    "reentrancy", "unchecked-send", "integer-overflow", "tx-origin-auth",
    "timestamp-dependence", "unprotected-selfdestruct",
    "delegatecall-injection", "default-visibility", "frozen-ether",
    "bad-randomness",
)


class SnapshotError(Exception):
    """Raised when a snapshot directory cannot be read or written."""


@dataclass(frozen=True)
class FragmentRecord:
    """Stored fragment metadata; streams are not retained, digests are."""

    fragment_id: str
    source_id: str
    granularity: str
    span: tuple[int, int, int, int]
    parent_id: str | None
    digest: str
    degenerate: bool


@dataclass(frozen=True)
class BugRecord:
    bug_id: str
    category: str
    statement_streams: tuple[tuple[str, ...], ...]
    description: str = ""
    provenance: str = ""


@dataclass(frozen=True)
class AddDelta:
    source_id: str
    duplicate: bool
    added: dict[str, int]  # granularity -> fragment rows appended


class Store:
    """Fragment vectors, exact index and bug matrix over a frozen table."""

    def __init__(self, table: EmbeddingTable, categories=DEFAULT_BUG_CATEGORIES):
        self.table = table
        self.categories = tuple(categories)
        self.version = 0
        self.reads = 0  # matrix materializations; observable for cache tests
        self._lock = threading.RLock()
        self._sources: list[dict] = []
        self._hashes: set[str] = set()
        self._source_ids: set[str] = set()
        self._records: dict[str, list[FragmentRecord]] = {g: [] for g in GRANULARITIES}
        self._record_by_id: dict[str, FragmentRecord] = {}
        self._rows: dict[str, list[np.ndarray]] = {g: [] for g in GRANULARITIES}
        self._exact: dict[str, dict[str, list[str]]] = {g: {} for g in GRANULARITIES}
        self._bugs: list[BugRecord] = []
        self._bug_rows: list[np.ndarray] = []
        self._bug_ids: list[str] = []
        self._batch_depth = 0
        self._batch_dirty = False

    # --- versioning -------------------------------------------------------

    def _mark_dirty(self) -> None:
        if self._batch_depth > 0:
            self._batch_dirty = True
        else:
            self.version += 1

    @contextmanager
    def batch(self):
        """Group mutations into a single version bump, published atomically."""
        with self._lock:
            self._batch_depth += 1
        try:
            yield self
        finally:
            with self._lock:
                self._batch_depth -= 1
                if self._batch_depth == 0 and self._batch_dirty:
                    self._batch_dirty = False
                    self.version += 1

    # --- mutation -----------------------------------------------------------

    def add_contract(self, unit: SourceUnit, fragments: list[Fragment],
                     vectors: list[FragmentVector]) -> AddDelta:
        """Append one matrix row per fragment; no-op for known content hashes."""
        if len(fragments) != len(vectors):
            raise ValueError("fragments and vectors must align")
        for vec in vectors:
            if vec.vector.shape != (self.table.dim,):
                raise ValueError(f"vector dimension {vec.vector.shape} does not "
                                 f"match table dimension {self.table.dim}")
        with self._lock:
            if unit.content_hash in self._hashes:
                return AddDelta(source_id=unit.id, duplicate=True,
                                added={g: 0 for g in GRANULARITIES})
            if unit.id in self._source_ids:
                raise ValueError(f"source id {unit.id!r} already present "
                                 "with different content")
            added = {g: 0 for g in GRANULARITIES}
            for frag, vec in zip(fragments, vectors):
                if frag.granularity not in GRANULARITIES:
                    raise ValueError(f"unknown granularity {frag.granularity!r}")
                digest = stream_digest(frag.stream)
                record = FragmentRecord(
                    fragment_id=frag.fragment_id, source_id=frag.source_id,
                    granularity=frag.granularity, span=frag.span,
                    parent_id=frag.parent_id, digest=digest,
                    degenerate=vec.is_degenerate)
                self._records[frag.granularity].append(record)
                self._record_by_id[record.fragment_id] = record
                row = np.array(vec.vector, dtype=np.float64, copy=True)
                self._rows[frag.granularity].append(row)
                self._exact[frag.granularity].setdefault(digest, []).append(
                    frag.fragment_id)
                added[frag.granularity] += 1
            self._sources.append({"id": unit.id, "path": unit.path,
                                  "content_hash": unit.content_hash})
            self._hashes.add(unit.content_hash)
            self._source_ids.add(unit.id)
            self._mark_dirty()
            return AddDelta(source_id=unit.id, duplicate=False, added=added)

    def add_bug(self, record: BugRecord) -> int:
        """Embed each statement stream as a bug matrix row. Returns rows added."""
        if not record.statement_streams:
            raise ValueError(f"bug {record.bug_id!r} has no statement streams")
        if record.category not in self.categories:
            raise ValueError(f"bug {record.bug_id!r} has unknown category "
                             f"{record.category!r}")
        vectors = []
        for idx, stream in enumerate(record.statement_streams):
            vec = embed_stream(stream, self.table)
            if vec.is_degenerate:
                raise ValueError(
                    f"bug {record.bug_id!r} statement {idx} is entirely "
                    "out-of-vocabulary; a zero bug vector would match every "
                    "degenerate fragment")
            vectors.append(vec.vector)
        with self._lock:
            if any(b.bug_id == record.bug_id for b in self._bugs):
                raise ValueError(f"bug id {record.bug_id!r} already present")
            self._bugs.append(record)
            for idx, vector in enumerate(vectors):
                self._bug_rows.append(np.array(vector, dtype=np.float64))
                self._bug_ids.append(f"{record.bug_id}#{idx}")
            self._mark_dirty()
            return len(vectors)

    # --- read access -----------------------------------------------------------

    def snapshot_matrix(self, granularity: str) -> MatrixSnapshot:
        """Materialize an immutable matrix view (counts as a storage read)."""
        if granularity not in GRANULARITIES:
            raise ValueError(f"unknown granularity {granularity!r}")
        with self._lock:
            self.reads += 1
            records = list(self._records[granularity])
            rows = self._stack(self._rows[granularity])
            version = self.version
        return MatrixSnapshot(
            granularity=granularity, version=version, rows=rows,
            norms=np.linalg.norm(rows, axis=1),
            ids=tuple(r.fragment_id for r in records),
            degenerate=np.array([r.degenerate for r in records], dtype=bool))

    def bug_snapshot(self) -> MatrixSnapshot:
        with self._lock:
            self.reads += 1
            rows = self._stack(self._bug_rows)
            ids = tuple(self._bug_ids)
            version = self.version
        return MatrixSnapshot(
            granularity="bug", version=version, rows=rows,
            norms=np.linalg.norm(rows, axis=1), ids=ids,
            degenerate=np.zeros(len(ids), dtype=bool))

    def _stack(self, rows: list[np.ndarray]) -> np.ndarray:
        if rows:
            out = np.vstack(rows)
        else:
            out = np.empty((0, self.table.dim), dtype=np.float64)
        out.setflags(write=False)
        return out

    def exact_groups(self, granularity: str) -> dict[str, tuple[str, ...]]:
        with self._lock:
            return {digest: tuple(ids)
                    for digest, ids in self._exact[granularity].items()}

    def lookup_exact(self, granularity: str, digest: str) -> tuple[str, ...]:
        with self._lock:
            return tuple(self._exact[granularity].get(digest, ()))

    def fragment_record(self, fragment_id: str) -> FragmentRecord | None:
        with self._lock:
            return self._record_by_id.get(fragment_id)

    def fragment_records(self, granularity: str) -> list[FragmentRecord]:
        with self._lock:
            return list(self._records[granularity])

    def enclosing_chain(self, fragment_id: str) -> list[FragmentRecord]:
        """Parent records from the fragment up to its contract."""
        chain = []
        with self._lock:
            record = self._record_by_id.get(fragment_id)
            while record is not None and record.parent_id is not None:
                record = self._record_by_id.get(record.parent_id)
                if record is not None:
                    chain.append(record)
        return chain

    def fragment_count(self, granularity: str) -> int:
        with self._lock:
            return len(self._records[granularity])

    @property
    def bug_records(self) -> list[BugRecord]:
        with self._lock:
            return list(self._bugs)

    @property
    def sources(self) -> list[dict]:
        with self._lock:
            return [dict(s) for s in self._sources]

    def has_content(self, content_hash: str) -> bool:
        with self._lock:
            return content_hash in self._hashes

    def stats(self) -> dict:
        with self._lock:
            return {
                "version": self.version,
                "dim": self.table.dim,
                "vocabulary_size": len(self.table.vocab),
                "sources": len(self._sources),
                "fragments": {g: len(self._records[g]) for g in GRANULARITIES},
                "bugs": len(self._bugs),
                "bug_statements": len(self._bug_ids),
                "categories": list(self.categories),
            }

    # --- persistence --------------------------------------------------------------

    def save_snapshot(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        with self._lock:
            manifest = {
                "format": "solembed-snapshot",
                "format_version": SNAPSHOT_FORMAT_VERSION,
                "version": self.version,
                "dim": self.table.dim,
                "granularities": list(GRANULARITIES),
                "counts": {g: len(self._records[g]) for g in GRANULARITIES},
                "bug_count": len(self._bugs),
                "categories": list(self.categories),
                "sources": self._sources,
            }
            (directory / "manifest.json").write_text(
                json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                encoding="utf-8")
            self.table.save(directory / "embeddings.txt")
            with open(directory / "fragments.jsonl", "w", encoding="utf-8") as fh:
                for granularity in GRANULARITIES:
                    for record in self._records[granularity]:
                        fh.write(json.dumps({
                            "fragment_id": record.fragment_id,
                            "source_id": record.source_id,
                            "granularity": record.granularity,
                            "span": list(record.span),
                            "parent_id": record.parent_id,
                            "digest": record.digest,
                            "degenerate": record.degenerate,
                        }, sort_keys=True) + "\n")
            for granularity in GRANULARITIES:
                with open(directory / f"matrix_{granularity}.txt", "w",
                          encoding="utf-8") as fh:
                    for row in self._rows[granularity]:
                        fh.write(" ".join(repr(float(x)) for x in row) + "\n")
            bugs = [{
                "bug_id": b.bug_id,
                "category": b.category,
                "description": b.description,
                "provenance": b.provenance,
                "statement_streams": [list(s) for s in b.statement_streams],
            } for b in self._bugs]
            (directory / "bugs.json").write_text(
                json.dumps(bugs, indent=2, sort_keys=True) + "\n",
                encoding="utf-8")

    @classmethod
    def load_snapshot(cls, directory) -> "Store":
        directory = Path(directory)

        def fail(filename: str, why: str):
            raise SnapshotError(f"{filename}: {why}")

        manifest_path = directory / "manifest.json"
        if not manifest_path.exists():
            fail("manifest.json", f"missing in {directory}")
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            fail("manifest.json", f"invalid JSON ({err})")
        if manifest.get("format") != "solembed-snapshot":
            fail("manifest.json", "not a solembed snapshot")
        if manifest.get("format_version") != SNAPSHOT_FORMAT_VERSION:
            fail("manifest.json",
                 f"unsupported snapshot format version "
                 f"{manifest.get('format_version')!r}, "
                 f"this build reads version {SNAPSHOT_FORMAT_VERSION}")

        embeddings_path = directory / "embeddings.txt"
        if not embeddings_path.exists():
            fail("embeddings.txt", f"missing in {directory}")
        try:
            table = EmbeddingTable.load(embeddings_path)
        except (ValueError, OSError) as err:
            fail("embeddings.txt", str(err))
        if table.dim != manifest.get("dim"):
            fail("embeddings.txt",
                 f"dimension {table.dim} does not match manifest "
                 f"dim {manifest.get('dim')!r}")

        store = cls(table, categories=tuple(manifest.get(
            "categories", DEFAULT_BUG_CATEGORIES)))

        fragments_path = directory / "fragments.jsonl"
        if not fragments_path.exists():
            fail("fragments.jsonl", f"missing in {directory}")
        with open(fragments_path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    record = FragmentRecord(
                        fragment_id=obj["fragment_id"],
                        source_id=obj["source_id"],
                        granularity=obj["granularity"],
                        span=tuple(obj["span"]),
                        parent_id=obj["parent_id"],
                        digest=obj["digest"],
                        degenerate=bool(obj["degenerate"]))
                except (json.JSONDecodeError, KeyError, TypeError) as err:
                    fail("fragments.jsonl", f"bad record on line {lineno} ({err})")
                if record.granularity not in GRANULARITIES:
                    fail("fragments.jsonl",
                         f"unknown granularity on line {lineno}")
                store._records[record.granularity].append(record)
                store._record_by_id[record.fragment_id] = record
                store._exact[record.granularity].setdefault(
                    record.digest, []).append(record.fragment_id)

        for granularity in GRANULARITIES:
            filename = f"matrix_{granularity}.txt"
            matrix_path = directory / filename
            if not matrix_path.exists():
                fail(filename, f"missing in {directory}")
            rows: list[np.ndarray] = []
            with open(matrix_path, "r", encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        row = np.array([float(x) for x in line.split()],
                                       dtype=np.float64)
                    except ValueError:
                        fail(filename, f"bad float on line {lineno}")
                    if row.shape != (table.dim,):
                        fail(filename, f"row {lineno} has {row.shape[0]} "
                             f"values, expected {table.dim}")
                    rows.append(row)
            if len(rows) != len(store._records[granularity]):
                fail(filename, f"{len(rows)} rows but "
                     f"{len(store._records[granularity])} fragment records")
            store._rows[granularity] = rows

        bugs_path = directory / "bugs.json"
        if not bugs_path.exists():
            fail("bugs.json", f"missing in {directory}")
        try:
            bug_objs = json.loads(bugs_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            fail("bugs.json", f"invalid JSON ({err})")
        for obj in bug_objs:
            try:
                record = BugRecord(
                    bug_id=obj["bug_id"], category=obj["category"],
                    statement_streams=tuple(tuple(s) for s in
                                            obj["statement_streams"]),
                    description=obj.get("description", ""),
                    provenance=obj.get("provenance", ""))
            except (KeyError, TypeError) as err:
                fail("bugs.json", f"bad bug record ({err})")
            try:
                store.add_bug(record)
            except ValueError as err:
                fail("bugs.json", str(err))

        store._sources = [dict(s) for s in manifest.get("sources", [])]
        store._hashes = {s["content_hash"] for s in store._sources}
        store._source_ids = {s["id"] for s in store._sources}
        store.version = int(manifest.get("version", 0))

        counts = manifest.get("counts", {})
        for granularity in GRANULARITIES:
            expected = counts.get(granularity)
            if expected is not None and expected != len(store._records[granularity]):
                fail("manifest.json",
                     f"count for {granularity} is {expected} but "
                     f"fragments.jsonl holds {len(store._records[granularity])}")
        return store
