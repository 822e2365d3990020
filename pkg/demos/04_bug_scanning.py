#!/usr/bin/env python3
"""Bug scanning against the shipped sample bug database.

A contract copies a known risky statement with different literals and
identifiers intact; the statement-level match surfaces it, while the
clean sibling stays quiet. Validation gives the same answer for pasted
source."""

from solembed import (Hyperparams, Store, detect_corpus_bugs,
                      extract_fragments, load_bug_records, parse_text,
                      sample_bug_db_path, train_embeddings, validate_contract)
from solembed.ingestion import make_source_unit
from solembed.embedding import embed_fragment

LOTTERY = """\
contract Lottery {
    uint ticketCount = 50;
    address winnerAddress;

    function draw() public {
        uint winner = uint(blockhash(block.number - 1)) % ticketCount;
        winnerAddress = msg.sender;
    }
}
"""

CLEAN = """\
contract Raffle {
    uint entries;
    function enter() public payable { entries = entries + 1; }
}
"""


def add(store, name, text):
    unit = make_source_unit(name, text)
    root, _ = parse_text(text)
    frags = extract_fragments(root, unit.id)
    store.add_contract(unit, frags,
                       [embed_fragment(f, store.table) for f in frags])


if __name__ == "__main__":
    records = load_bug_records(sample_bug_db_path())
    print(f"sample bug database: {len(records)} records, categories:")
    for record in records:
        print(f"  {record.bug_id}  {record.category:<24} "
              f"{len(record.statement_streams)} stream(s)")

    streams = []
    for text in (LOTTERY, CLEAN):
        root, _ = parse_text(text)
        streams += [f.stream for f in extract_fragments(root, "x")
                    if f.granularity == "contract"]
    # widen the vocabulary with the bug statements themselves so the rows
    # are never all-out-of-vocabulary on this tiny corpus
    streams += [s for r in records for s in r.statement_streams]

    table = train_embeddings(
        streams, Hyperparams(dim=32, epochs=6, min_count=1, seed=2))
    store = Store(table)
    for record in records:
        store.add_bug(record)
    add(store, "lottery.sol", LOTTERY)
    add(store, "raffle.sol", CLEAN)

    print("\ncorpus scan at bug threshold 0.90:")
    for hit in detect_corpus_bugs(store, bug_threshold=0.90):
        print(f"  {hit.source_id} lines {hit.span[0]}-{hit.span[2]}: "
              f"{hit.category} ({hit.bug_id}) score {hit.score:.3f}")

    print("\nvalidating pasted source with a mutated literal:")
    report = validate_contract(LOTTERY.replace("- 1", "- 3"), store)
    for hit in report.bug_hits:
        print(f"  line {hit.span[0]}: {hit.category} score {hit.score:.3f}")
    print(f"  oov rate {report.oov_rate:.3f}, "
          f"corpus version {report.corpus_version}")
