"""CLI surface: subcommands, exit codes, JSON determinism."""

import json

import pytest

from solembed.cli import main

from corpusgen import generate_corpus
from support import write_files


@pytest.fixture()
def corpus_dir(tmp_path):
    d = tmp_path / "corpus"
    d.mkdir()
    write_files(d, generate_corpus(8, seed=17))
    return d


@pytest.fixture()
def trained_store(tmp_path, corpus_dir, capsys):
    store_dir = tmp_path / "store"
    rc = main(["train", str(corpus_dir), "--store", str(store_dir),
               "--dim", "16", "--epochs", "2", "--min-count", "1",
               "--seed", "5", "--bug-db", "sample"])
    assert rc == 0
    rc = main(["ingest", str(corpus_dir), "--store", str(store_dir)])
    assert rc == 0
    capsys.readouterr()  # drop setup output
    return store_dir


def run_json(capsys, argv):
    rc = main(argv)
    out = capsys.readouterr().out
    return rc, json.loads(out)


def test_train_reports_summary(tmp_path, corpus_dir, capsys):
    store_dir = tmp_path / "s"
    rc, payload = run_json(capsys, [
        "train", str(corpus_dir), "--store", str(store_dir),
        "--dim", "8", "--epochs", "1", "--min-count", "1"])
    assert rc == 0
    assert payload["dim"] == 8
    assert payload["vocabulary_size"] > 0
    assert (store_dir / "manifest.json").exists()


def test_stats_matches_manifest(trained_store, capsys):
    rc, stats = run_json(capsys, ["stats", "--store", str(trained_store)])
    assert rc == 0
    manifest = json.loads(
        (trained_store / "manifest.json").read_text(encoding="utf-8"))
    assert stats["version"] == manifest["version"]
    assert stats["fragments"] == manifest["counts"]
    assert stats["dim"] == manifest["dim"]


def test_clones_runs_and_reports(trained_store, capsys):
    rc, report = run_json(capsys, [
        "clones", "--store", str(trained_store),
        "--granularity", "contract", "--threshold", "0.95"])
    assert rc == 0
    assert report["granularity"] == "contract"
    assert "pairs" in report and "clone_ratio" in report


def test_threshold_out_of_range_is_usage_error(trained_store, capsys):
    rc = main(["clones", "--store", str(trained_store), "--threshold", "1.5"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "threshold" in err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["clones", "--nope"]) == 1


def test_missing_store_is_analysis_error(tmp_path, capsys):
    rc = main(["stats", "--store", str(tmp_path / "absent")])
    assert rc == 2
    assert "manifest.json" in capsys.readouterr().err


def test_validate_corpus_member_scores_one(trained_store, corpus_dir, capsys):
    member = sorted(corpus_dir.glob("*.sol"))[0]
    rc, report = run_json(capsys, [
        "validate", str(member), "--store", str(trained_store)])
    assert rc == 0
    top = report["clone_hits"]["contract"][0]
    assert top["score"] == 1.0


def test_validate_empty_file(trained_store, tmp_path, capsys):
    empty = tmp_path / "empty.sol"
    empty.write_text("", encoding="utf-8")
    rc, report = run_json(capsys, [
        "validate", str(empty), "--store", str(trained_store)])
    assert rc == 0
    assert report["diagnostics"] == []
    assert all(not hits for hits in report["clone_hits"].values())
    assert report["bug_hits"] == []


def test_validate_missing_file_is_analysis_error(trained_store, capsys):
    assert main(["validate", "/no/such/file.sol",
                 "--store", str(trained_store)]) == 2


def test_cli_output_is_deterministic(trained_store, corpus_dir, capsys):
    member = sorted(corpus_dir.glob("*.sol"))[1]
    argv = ["validate", str(member), "--store", str(trained_store)]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    second = capsys.readouterr().out
    assert first == second


def test_emit_ast_needs_no_store(tmp_path, capsys):
    f = tmp_path / "a.sol"
    f.write_text("contract A { uint x; }", encoding="utf-8")
    rc = main(["validate", str(f), "--emit-ast"])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.startswith("SourceUnitNode@1:1")
    assert "ContractDefinition@" in out


def test_emit_stream_prints_one_line_per_fragment(tmp_path, capsys):
    f = tmp_path / "a.sol"
    f.write_text("contract A { function f() public { uint x = 1; x = 2; } }",
                 encoding="utf-8")
    rc = main(["validate", str(f), "--emit-stream", "statement"])
    out = capsys.readouterr().out.strip().splitlines()
    assert rc == 0
    assert len(out) == 2
    assert out[0].startswith("VariableDeclarationStatement")


def test_validate_without_store_or_dump_is_usage_error(tmp_path, capsys):
    f = tmp_path / "a.sol"
    f.write_text("contract A {}", encoding="utf-8")
    assert main(["validate", str(f)]) == 1


def test_bugs_scan_finds_planted_statement(tmp_path, corpus_dir, capsys):
    from corpusgen import BUG_STATEMENT
    (corpus_dir / "planted.sol").write_text(
        "contract P { function f() public {\n" + BUG_STATEMENT + "\n} }\n",
        encoding="utf-8")
    store_dir = tmp_path / "s2"
    bug_db = tmp_path / "bugs.json"
    bug_db.write_text(json.dumps([{
        "bug_id": "X1", "category": "bad-randomness",
        "statement_source": BUG_STATEMENT,
        "description": "planted"}]), encoding="utf-8")
    assert main(["train", str(corpus_dir), "--store", str(store_dir),
                 "--dim", "16", "--epochs", "1", "--min-count", "1",
                 "--bug-db", str(bug_db)]) == 0
    assert main(["ingest", str(corpus_dir), "--store", str(store_dir)]) == 0
    capsys.readouterr()
    rc, payload = run_json(capsys, ["bugs", "--store", str(store_dir),
                                    "--threshold", "0.9"])
    assert rc == 0
    assert any(h["score"] == 1.0 and h["bug_id"] == "X1"
               for h in payload["hits"])


def test_bench_prints_csv(capsys):
    rc = main(["bench", "--rows", "500", "--dim", "16",
               "--naive-rows-cap", "200"])
    out = capsys.readouterr().out.strip().splitlines()
    assert rc == 0
    assert out[0] == "method,rows,dim,millis"
    assert out[1].startswith("batch,500,16,")
    assert out[2].startswith("naive,500,16,")
