"""Ingestion: dedup, failure capture, batch versioning, OOV advisory."""

import numpy as np
import pytest

from solembed.embedding import Hyperparams, train_embeddings
from solembed.ingestion import (DirectorySource, RemoteChainSource, ingest,
                                update_model)
from solembed.store import Store

from corpusgen import generate_corpus
from support import build_store, contract_streams, write_files

CONTRACT = """\
contract Meter {
    uint reading = 5;
    function push(uint v) public { reading = reading + v; }
}
"""


def table_for(files, min_count=1):
    return train_embeddings(contract_streams(files),
                            Hyperparams(dim=16, epochs=2, min_count=min_count,
                                        seed=3))


def test_empty_directory_is_a_noop(tmp_path):
    store = Store(table_for([("x.sol", CONTRACT)]))
    version = store.version
    delta = ingest(DirectorySource(tmp_path), store)
    assert (delta.added, delta.skipped_duplicates, delta.failed) == (0, 0, ())
    assert delta.new_version == version  # no-op batches do not bump


def test_binary_junk_is_recorded_not_fatal(tmp_path):
    (tmp_path / "good.sol").write_text(CONTRACT, encoding="utf-8")
    (tmp_path / "junk.sol").write_bytes(b"\xff\xfe\x00PNG\x9cjunk\xff")
    store = Store(table_for([("x.sol", CONTRACT)]))
    delta = ingest(DirectorySource(tmp_path), store)
    assert delta.added == 1
    assert len(delta.failed) == 1
    path, diag = delta.failed[0]
    assert path == "junk.sol"
    assert diag.severity == "error"


def test_reingest_is_idempotent(tmp_path):
    write_files(tmp_path, generate_corpus(5, seed=7))
    store = Store(table_for(generate_corpus(5, seed=7)))
    first = ingest(DirectorySource(tmp_path), store)
    assert first.added == 5
    version_after_first = store.version
    frag_counts = {g: store.fragment_count(g)
                   for g in ("contract", "function", "statement")}
    second = ingest(DirectorySource(tmp_path), store)
    assert second.added == 0
    assert second.skipped_duplicates == 5
    assert store.version == version_after_first  # no-op batch: no bump
    for g, n in frag_counts.items():
        assert store.fragment_count(g) == n


def test_accounting_identity(tmp_path):
    files = generate_corpus(4, seed=1)
    write_files(tmp_path, files)
    (tmp_path / "bad.sol").write_bytes(b"\xff\x00\xff")
    store = Store(table_for(files))
    delta = ingest(DirectorySource(tmp_path), store)
    examined = 5
    assert delta.added + delta.skipped_duplicates + len(delta.failed) == examined


def test_one_version_bump_per_batch(tmp_path):
    write_files(tmp_path, generate_corpus(6, seed=2))
    store = Store(table_for(generate_corpus(6, seed=2)))
    v0 = store.version
    delta = ingest(DirectorySource(tmp_path), store)
    assert delta.added == 6
    assert delta.new_version == v0 + 1
    assert store.version == v0 + 1


def test_ingest_never_changes_existing_vectors(tmp_path):
    batch1 = generate_corpus(3, seed=5)
    batch2 = [(f"late{i}.sol", text) for i, (_, text) in
              enumerate(generate_corpus(3, seed=99))]
    d1 = tmp_path / "one"
    d2 = tmp_path / "two"
    d1.mkdir()
    d2.mkdir()
    write_files(d1, batch1)
    write_files(d2, batch2)
    store = Store(table_for(batch1))
    ingest(DirectorySource(d1), store)
    before = store.snapshot_matrix("statement").rows.copy()
    ingest(DirectorySource(d2), store)
    after = store.snapshot_matrix("statement").rows
    assert np.array_equal(after[:before.shape[0]], before)


def test_in_vocabulary_batch_has_zero_oov(tmp_path):
    files = generate_corpus(3, seed=5)
    write_files(tmp_path, files)
    store = Store(table_for(files))
    delta = update_model(DirectorySource(tmp_path), store)
    assert delta.oov_rate == 0.0
    assert not delta.retrain_advised


def test_oov_rate_one_in_ten_sets_flag(tmp_path):
    # vocabulary covers this contract except one identifier; its contract
    # stream is exactly 10 tokens, so the rate is exactly 0.1
    known = "contract Q is A, B, C {}\n"
    novel = "contract Q is A, B, Czz {}\n"
    table = train_embeddings(contract_streams([("k.sol", known)]),
                             Hyperparams(dim=8, epochs=1, min_count=1, seed=1))
    store = Store(table)
    (tmp_path / "n.sol").write_text(novel, encoding="utf-8")
    delta = update_model(DirectorySource(tmp_path), store)
    assert delta.added == 1
    assert delta.oov_rate == pytest.approx(0.1)
    assert delta.retrain_advised  # 0.1 > 0.05 default advisory threshold


def test_retrain_clears_the_advisory(tmp_path):
    # flagged batch, then retrain on the union and re-ingest from scratch:
    # the same batch is fully in-vocabulary afterwards
    old_files = generate_corpus(3, seed=1)
    new_files = [("fresh0.sol", "contract Fresh { uint zing = 1; "
                  "function whirl(uint q) public { zing = zing + q; } }\n")]
    old_dir = tmp_path / "old"
    new_dir = tmp_path / "new"
    old_dir.mkdir()
    new_dir.mkdir()
    write_files(old_dir, old_files)
    write_files(new_dir, new_files)

    store = Store(table_for(old_files, min_count=2))
    ingest(DirectorySource(old_dir), store)
    flagged = update_model(DirectorySource(new_dir), store)
    assert flagged.oov_rate > 0.05 and flagged.retrain_advised

    retrained = Store(table_for(old_files + new_files, min_count=1))
    ingest(DirectorySource(old_dir), retrained)
    ingest(DirectorySource(new_dir), retrained)
    # identical content is deduped, so check with a re-embedding batch of
    # the same text under a new name
    again = tmp_path / "again"
    again.mkdir()
    write_files(again, [("fresh_copy.sol", new_files[0][1] + "// bis\n")])
    after = update_model(DirectorySource(again), retrained)
    assert after.oov_rate == 0.0
    assert not after.retrain_advised


def test_remote_chain_source_is_a_stub():
    provider = RemoteChainSource("http://node.example:8545")
    with pytest.raises(NotImplementedError):
        list(provider.enumerate())


def test_changed_file_at_same_path_gets_fresh_source_id(tmp_path):
    (tmp_path / "a.sol").write_text(CONTRACT, encoding="utf-8")
    store = Store(table_for([("x.sol", CONTRACT)]))
    ingest(DirectorySource(tmp_path), store)
    (tmp_path / "a.sol").write_text(CONTRACT.replace("Meter", "Gauge"),
                                    encoding="utf-8")
    delta = ingest(DirectorySource(tmp_path), store)
    assert delta.added == 1
    assert len({s["id"] for s in store.sources}) == 2
