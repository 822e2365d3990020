"""Corpus building and incremental updates from local source trees.

Ingestion embeds new code with the store's frozen embedding table; it
never retrains. The out-of-vocabulary rate of each batch is the retrain
signal: when it exceeds the advisory threshold the delta carries a flag,
and retraining stays an explicit separate step.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

from .embedding import embed_fragment
from .fragments import extract_fragments
from .lexer import Diagnostic
from .parser import SourceUnit, parse
from .store import Store

RETRAIN_ADVISORY_THRESHOLD = 0.05


@dataclass(frozen=True)
class IngestDelta:
    added: int
    skipped_duplicates: int
    failed: tuple[tuple[str, Diagnostic], ...]
    new_version: int
    oov_rate: float | None = None  # set by update_model
    retrain_advised: bool = False

    def to_dict(self) -> dict:
        return {
            "added": self.added,
            "skipped_duplicates": self.skipped_duplicates,
            "failed": [{"path": path, "severity": d.severity,
                        "message": d.message, "line": d.line, "col": d.col}
                       for path, d in self.failed],
            "new_version": self.new_version,
            "oov_rate": self.oov_rate,
            "retrain_advised": self.retrain_advised,
        }


class DirectorySource:
    """Filesystem provider: *.sol files under a root, lexicographic by path.

    Unreadable files (I/O errors, invalid UTF-8) are yielded as
    (path, None) so a bad file can never abort a batch.
    """

    def __init__(self, root, pattern: str = "*.sol"):
        self.root = Path(root)
        self.pattern = pattern

    def enumerate(self):
        paths = sorted(self.root.rglob(self.pattern),
                       key=lambda p: str(p.relative_to(self.root)))
        for path in paths:
            rel = str(path.relative_to(self.root))
            try:
                yield rel, path.read_text(encoding="utf-8")
            except (OSError, UnicodeDecodeError):
                yield rel, None


class RemoteChainSource:
    """Seam for pulling contract sources from a chain node. Stub only:
    enumeration is not implemented; ingest from a local directory instead."""

    def __init__(self, endpoint: str):
        self.endpoint = endpoint

    def enumerate(self):
        raise NotImplementedError(
            "remote contract fetching is not implemented; "
            "export sources to a directory and use DirectorySource")


def make_source_unit(path: str, text: str) -> SourceUnit:
    """Source id combines path and a content-hash prefix, so a file that
    changes between batches gets a fresh id instead of colliding."""
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return SourceUnit(id=f"{path}@{digest[:8]}", path=path, text=text,
                      content_hash=digest)


def ingest(provider, store: Store) -> IngestDelta:
    """Parse, embed and add every source the provider yields.

    Content-hash duplicates are skipped; unreadable files and files whose
    parse recovers nothing analyzable are recorded as failed. The whole
    batch publishes atomically with a single version bump (none if the
    batch was a no-op).
    """
    delta, _, _ = _run(provider, store)
    return delta


def update_model(provider, store: Store,
                 retrain_advisory_threshold: float = RETRAIN_ADVISORY_THRESHOLD
                 ) -> IngestDelta:
    """ingest plus an out-of-vocabulary report over the new batch."""
    delta, oov, total = _run(provider, store)
    rate = oov / total if total else 0.0
    return IngestDelta(
        added=delta.added, skipped_duplicates=delta.skipped_duplicates,
        failed=delta.failed, new_version=delta.new_version, oov_rate=rate,
        retrain_advised=rate > retrain_advisory_threshold)


def _run(provider, store: Store) -> tuple[IngestDelta, int, int]:
    added = 0
    skipped = 0
    failed: list[tuple[str, Diagnostic]] = []
    oov_occurrences = 0
    token_occurrences = 0

    with store.batch():
        for path, text in provider.enumerate():
            if text is None:
                failed.append((path, Diagnostic(
                    "error", "unreadable file (I/O error or not UTF-8)", 1, 1)))
                continue
            unit = make_source_unit(path, text)
            if store.has_content(unit.content_hash):
                skipped += 1
                continue
            root, diags = parse(unit)
            fragments = extract_fragments(root, unit.id)
            errors = [d for d in diags if d.severity == "error"]
            if not fragments and errors:
                failed.append((path, errors[0]))
                continue
            vectors = [embed_fragment(f, store.table) for f in fragments]
            try:
                store.add_contract(unit, fragments, vectors)
            except ValueError as err:
                failed.append((path, Diagnostic("error", str(err), 1, 1)))
                continue
            for frag, vec in zip(fragments, vectors):
                if frag.granularity == "contract":
                    oov_occurrences += vec.oov_count
                    token_occurrences += vec.token_count
            added += 1

    delta = IngestDelta(added=added, skipped_duplicates=skipped,
                        failed=tuple(failed), new_version=store.version)
    return delta, oov_occurrences, token_occurrences
