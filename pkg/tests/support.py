"""Shared store-building plumbing for tests (oracles live in the tests)."""

from __future__ import annotations

from solembed import (Hyperparams, Store, embed_fragment, extract_fragments,
                      parse, train_embeddings)
from solembed.ingestion import make_source_unit

FAST_HP = Hyperparams(dim=32, window=5, negatives=5, epochs=3, min_count=1,
                      seed=7)


def contract_streams(files):
    streams = []
    for name, text in files:
        root, _ = parse(make_source_unit(name, text))
        for frag in extract_fragments(root, name):
            if frag.granularity == "contract":
                streams.append(frag.stream)
    return streams


def build_store(files, hp: Hyperparams = FAST_HP, bug_records=()) -> Store:
    """Train a table on the files' contract streams and add every file."""
    table = train_embeddings(contract_streams(files), hp)
    store = Store(table)
    for record in bug_records:
        store.add_bug(record)
    add_files(store, files)
    return store


def add_files(store: Store, files) -> None:
    with store.batch():
        for name, text in files:
            unit = make_source_unit(name, text)
            root, _ = parse(unit)
            fragments = extract_fragments(root, unit.id)
            vectors = [embed_fragment(f, store.table) for f in fragments]
            store.add_contract(unit, fragments, vectors)


def write_files(directory, files) -> None:
    for name, text in files:
        (directory / name).write_text(text, encoding="utf-8")


def contract_fragment_id(store: Store, file_name: str) -> str:
    """The single contract-granularity fragment id of a corpus file."""
    matches = [r.fragment_id for r in store.fragment_records("contract")
               if r.source_id.startswith(file_name + "@")]
    assert len(matches) == 1, f"{file_name}: {matches}"
    return matches[0]
