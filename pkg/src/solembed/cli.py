"""Command-line interface.

Reports go to stdout as JSON (deterministic: sorted keys, no timestamps);
human summaries go to stderr. Exit codes: 0 success, 1 usage error,
2 analysis-blocking error (unreadable store, bad input file, ...).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bugs import BugLoadError, load_bug_records, sample_bug_db_path
from .detectors import detect_corpus_bugs, detect_corpus_clones, validate_contract
from .embedding import Hyperparams, train_embeddings
from .fragments import GRANULARITIES, extract_fragments, format_streams
from .ingestion import DirectorySource, update_model
from .parser import format_ast, parse_text
from .service import Service
from .similarity import Thresholds, run_benchmark
from .store import SnapshotError, Store

TRAINING_GRANULARITY = "contract"  # every analyzed token occurs exactly once


class _UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _threshold(value: str) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value!r} is not a number")
    if not 0.0 < parsed <= 1.0:
        raise argparse.ArgumentTypeError(
            f"threshold must be in (0, 1], got {value}")
    return parsed


def _positive_int(value: str) -> int:
    try:
        parsed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer")
    if parsed < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return parsed


def _emit_json(payload) -> None:
    print(json.dumps(payload, sort_keys=True, indent=2))


def _info(message: str) -> None:
    print(message, file=sys.stderr)


def _load_store(path: str) -> Store:
    return Store.load_snapshot(path)


def _training_streams(corpus_dir: str) -> list[tuple[str, ...]]:
    streams = []
    for path, text in DirectorySource(corpus_dir).enumerate():
        if text is None:
            _info(f"train: skipping unreadable file {path}")
            continue
        root, _diags = parse_text(text)
        for fragment in extract_fragments(root, path):
            if fragment.granularity == TRAINING_GRANULARITY:
                streams.append(fragment.stream)
    return streams


# --- subcommands -----------------------------------------------------------


def _cmd_train(args) -> int:
    streams = _training_streams(args.corpus_dir)
    hp = Hyperparams(dim=args.dim, window=args.window,
                     negatives=args.negatives, epochs=args.epochs,
                     initial_lr=args.learning_rate, min_count=args.min_count,
                     seed=args.seed)
    table = train_embeddings(streams, hp)
    store = Store(table)
    bug_db = args.bug_db
    if bug_db == "sample":
        bug_db = str(sample_bug_db_path())
    bugs_loaded = 0
    if bug_db:
        for record in load_bug_records(bug_db):
            store.add_bug(record)
            bugs_loaded += 1
    store.save_snapshot(args.store)
    _emit_json({"store": args.store, "vocabulary_size": len(table.vocab),
                "dim": table.dim, "training_streams": len(streams),
                "bugs_loaded": bugs_loaded})
    _info(f"train: {len(table.vocab)} tokens, d={table.dim}, "
          f"{len(streams)} streams, {bugs_loaded} bug records -> {args.store}")
    return 0


def _cmd_ingest(args) -> int:
    store = _load_store(args.store)
    delta = update_model(DirectorySource(args.dir), store)
    store.save_snapshot(args.store)
    _emit_json(delta.to_dict())
    _info(f"ingest: added {delta.added}, skipped {delta.skipped_duplicates}, "
          f"failed {len(delta.failed)}, version {delta.new_version}, "
          f"oov rate {delta.oov_rate:.4f}"
          + (" (retrain advised)" if delta.retrain_advised else ""))
    return 0


def _cmd_clones(args) -> int:
    store = _load_store(args.store)
    report = detect_corpus_clones(store, args.granularity, args.threshold)
    _emit_json(report.to_dict())
    _info(f"clones: {len(report.pairs)} pairs in {len(report.clusters)} "
          f"clusters, clone ratio {report.clone_ratio:.3f}")
    return 0


def _cmd_bugs(args) -> int:
    store = _load_store(args.store)
    hits = detect_corpus_bugs(store, args.threshold)
    _emit_json({"bug_threshold": args.threshold,
                "corpus_version": store.version,
                "hits": [h.to_dict() for h in hits]})
    _info(f"bugs: {len(hits)} hits at threshold {args.threshold}")
    return 0


def _cmd_validate(args) -> int:
    try:
        text = Path(args.file).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as err:
        _info(f"validate: cannot read {args.file}: {err}")
        return 2
    if args.emit_ast or args.emit_stream:
        root, diags = parse_text(text)
        if args.emit_ast:
            print(format_ast(root))
        if args.emit_stream:
            fragments = extract_fragments(root, args.file)
            print(format_streams(fragments, args.emit_stream))
        for diag in diags:
            _info(f"{args.file}:{diag.line}:{diag.col}: "
                  f"{diag.severity}: {diag.message}")
        return 0
    if not args.store:
        raise _UsageError("validate requires --store "
                          "(unless --emit-ast/--emit-stream)")
    store = _load_store(args.store)
    thresholds = Thresholds(clone_threshold=args.clone_threshold,
                            bug_threshold=args.bug_threshold)
    report = validate_contract(text, store, thresholds, top_k=args.top_k)
    _emit_json(report.to_dict())
    clone_count = sum(len(hits) for hits in report.clone_hits.values())
    _info(f"validate: {clone_count} clone hits, {len(report.bug_hits)} bug "
          f"hits, oov rate {report.oov_rate:.4f}, "
          f"{len(report.diagnostics)} diagnostics")
    return 0


def _cmd_serve(args) -> int:
    store = _load_store(args.store)
    thresholds = Thresholds(clone_threshold=args.clone_threshold,
                            bug_threshold=args.bug_threshold)
    service = Service(store, thresholds, host=args.host, port=args.port,
                      quiet=False)
    _info(f"serving on http://{args.host}:{service.port} "
          f"(store {args.store}, version {store.version})")
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        _info("shutting down")
    return 0


def _cmd_bench(args) -> int:
    results = run_benchmark(args.rows, args.dim, seed=args.seed,
                            naive_rows_cap=args.naive_rows_cap)
    print("method,rows,dim,millis")
    for row in results:
        print(f"{row['method']},{row['rows']},{row['dim']},{row['millis']:.3f}")
    return 0


def _cmd_stats(args) -> int:
    store = _load_store(args.store)
    _emit_json(store.stats())
    return 0


# --- wiring ---------------------------------------------------------------


def build_parser() -> _ArgumentParser:
    parser = _ArgumentParser(
        prog="solembed",
        description="Structural code embeddings for Solidity: clone "
                    "detection, bug scanning and contract validation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="learn an embedding table and initialize a store")
    p.add_argument("corpus_dir")
    p.add_argument("--store", required=True)
    p.add_argument("--dim", type=_positive_int, default=100)
    p.add_argument("--window", type=_positive_int, default=5)
    p.add_argument("--negatives", type=_positive_int, default=5)
    p.add_argument("--epochs", type=_positive_int, default=10)
    p.add_argument("--learning-rate", type=float, default=0.025)
    p.add_argument("--min-count", type=_positive_int, default=2)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--bug-db", default=None,
                   help="bug database JSON, or 'sample' for the shipped one")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("ingest", help="add a directory of contracts to a store")
    p.add_argument("dir")
    p.add_argument("--store", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("clones", help="report clone pairs in the corpus")
    p.add_argument("--store", required=True)
    p.add_argument("--granularity", choices=GRANULARITIES, default="contract")
    p.add_argument("--threshold", type=_threshold, default=0.95)
    p.set_defaults(func=_cmd_clones)

    p = sub.add_parser("bugs", help="scan corpus statements against the bug matrix")
    p.add_argument("--store", required=True)
    p.add_argument("--threshold", type=_threshold, default=0.90)
    p.set_defaults(func=_cmd_bugs)

    p = sub.add_parser("validate", help="check one contract against the corpus")
    p.add_argument("file")
    p.add_argument("--store")
    p.add_argument("--top-k", type=_positive_int, default=5)
    p.add_argument("--clone-threshold", type=_threshold, default=0.95)
    p.add_argument("--bug-threshold", type=_threshold, default=0.90)
    p.add_argument("--emit-ast", action="store_true",
                   help="print the parse tree instead of validating")
    p.add_argument("--emit-stream", choices=GRANULARITIES, default=None,
                   help="print normalized token streams instead of validating")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("serve", help="run the HTTP JSON API")
    p.add_argument("--store", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--clone-threshold", type=_threshold, default=0.95)
    p.add_argument("--bug-threshold", type=_threshold, default=0.90)
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("bench", help="time the similarity kernel vs the scalar loop")
    p.add_argument("--rows", type=_positive_int, default=10000)
    p.add_argument("--dim", type=_positive_int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--naive-rows-cap", type=_positive_int, default=2000)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("stats", help="print store counts and version")
    p.add_argument("--store", required=True)
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        _info(f"usage error: {err}")
        return 1
    try:
        return args.func(args)
    except _UsageError as err:
        _info(f"usage error: {err}")
        return 1
    except (SnapshotError, BugLoadError, ValueError, OSError) as err:
        _info(f"error: {err}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
