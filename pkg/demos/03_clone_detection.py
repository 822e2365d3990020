#!/usr/bin/env python3
"""Corpus clone detection end to end: build a store in a temp directory
with the CLI-equivalent library calls, plant clones, and read the report.

The planted pairs come back exact (score 1.0) because normalization wipes
the literal edits and formatting noise."""

import tempfile
from pathlib import Path

from solembed import (DirectorySource, Hyperparams, Store, detect_corpus_clones,
                      extract_fragments, ingest, parse_text, train_embeddings)

BASE = """\
contract Splitter {
    address left;
    address right;
    uint retained = 250;

    function divide() public payable {
        uint half = msg.value / 2;
        left.send(half - retained);
        right.send(half - retained);
    }
}
"""


def contract_streams(texts):
    streams = []
    for text in texts:
        root, _ = parse_text(text)
        streams += [f.stream for f in extract_fragments(root, "s")
                    if f.granularity == "contract"]
    return streams


if __name__ == "__main__":
    exact_clone = BASE + "// mirrored deployment\n"
    literal_clone = BASE.replace("250", "9000")
    unrelated = """\
contract Beacon {
    uint epoch;
    function advance() public { epoch = epoch + 1; }
}
"""
    files = {"original.sol": BASE, "copy.sol": exact_clone,
             "retuned.sol": literal_clone, "beacon.sol": unrelated}

    with tempfile.TemporaryDirectory() as tmp:
        for name, text in files.items():
            (Path(tmp) / name).write_text(text, encoding="utf-8")

        table = train_embeddings(
            contract_streams(files.values()),
            Hyperparams(dim=32, epochs=4, min_count=1, seed=9))
        store = Store(table)
        delta = ingest(DirectorySource(tmp), store)
        print(f"ingested {delta.added} files -> version {delta.new_version}")

        report = detect_corpus_clones(store, "contract", clone_threshold=0.95)
        print(f"\nclone pairs at threshold {report.clone_threshold}:")
        for pair in report.pairs:
            tag = "exact" if pair.exact else "near "
            print(f"  [{tag}] {pair.fragment_a}  ~  {pair.fragment_b}  "
                  f"score {pair.score:.3f}")
        print(f"clusters: {[len(c) for c in report.clusters]}, "
              f"clone ratio {report.clone_ratio:.2f}")

        print("\nsweep: ratio is non-increasing in the threshold")
        for theta in (0.90, 0.95, 0.99, 1.0):
            ratio = detect_corpus_clones(store, "contract", theta).clone_ratio
            print(f"  theta={theta:.2f}  ratio={ratio:.2f}")
