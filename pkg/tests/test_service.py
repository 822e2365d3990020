"""HTTP API: endpoints, error contract, parity with the library, snapshots."""

import json
import threading
import urllib.error
import urllib.request

import pytest

from solembed.detectors import validate_contract
from solembed.ingestion import DirectorySource, ingest
from solembed.service import Service
from solembed.similarity import Thresholds
from solembed.store import BugRecord

from corpusgen import BUG_STATEMENT, generate_corpus
from support import build_store, write_files


def http(method, url, body=None, headers=None, as_json=True):
    data = None
    if body is not None:
        data = body if isinstance(body, bytes) else json.dumps(body).encode()
    request = urllib.request.Request(url, data=data, method=method,
                                     headers=headers or {})
    try:
        with urllib.request.urlopen(request, timeout=30) as response:
            payload = response.read()
            return response.status, json.loads(payload) if as_json else payload
    except urllib.error.HTTPError as err:
        payload = err.read()
        return err.code, json.loads(payload) if as_json else payload


@pytest.fixture(scope="module")
def corpus_files():
    return generate_corpus(10, seed=23)


@pytest.fixture(scope="module")
def service(corpus_files):
    from solembed.bugs import streams_from_statement_source
    record = BugRecord(bug_id="SVC-1", category="bad-randomness",
                       statement_streams=tuple(
                           streams_from_statement_source(BUG_STATEMENT)),
                       description="service test bug")
    store = build_store(corpus_files, bug_records=[record])
    svc = Service(store, Thresholds(), port=0, admin_token="sesame")
    svc.start()
    yield svc
    svc.stop()


def url(service, path):
    return f"http://127.0.0.1:{service.port}{path}"


def test_validate_empty_source(service):
    status, report = http("POST", url(service, "/api/validate"),
                          {"source": ""})
    assert status == 200
    assert report["diagnostics"] == []
    assert report["bug_hits"] == []
    assert all(not hits for hits in report["clone_hits"].values())


def test_validate_corpus_member_hits_itself(service, corpus_files):
    status, report = http("POST", url(service, "/api/validate"),
                          {"source": corpus_files[2][1]})
    assert status == 200
    assert report["clone_hits"]["contract"][0]["score"] == 1.0


def test_malformed_json_is_bad_request(service):
    status, payload = http("POST", url(service, "/api/validate"),
                           b"not json at all")
    assert status == 400
    assert payload["code"] == "bad_request"
    assert "message" in payload


def test_missing_source_field_is_bad_request(service):
    status, payload = http("POST", url(service, "/api/validate"),
                           {"top_k": 3})
    assert status == 400
    assert payload["code"] == "bad_request"


def test_oversized_source_is_too_large(service):
    status, payload = http("POST", url(service, "/api/validate"),
                           {"source": "x" * ((1 << 20) + 1)})
    assert status == 413
    assert payload["code"] == "too_large"


def test_stats_reports_counts_and_thresholds(service):
    status, stats = http("GET", url(service, "/api/stats"))
    assert status == 200
    store = service.store
    assert stats["fragments"] == {g: store.fragment_count(g)
                                  for g in ("contract", "function", "statement")}
    assert stats["version"] == store.version
    assert stats["clone_threshold"] == 0.95
    assert stats["bug_threshold"] == 0.90


def test_bug_catalog_has_no_streams(service):
    status, payload = http("GET", url(service, "/api/bugs"))
    assert status == 200
    (bug,) = payload["bugs"]
    assert bug["bug_id"] == "SVC-1"
    assert bug["category"] == "bad-randomness"
    assert "statement_streams" not in bug
    assert bug["statement_count"] >= 1


def test_unknown_route_is_404(service):
    status, payload = http("GET", url(service, "/api/nope"))
    assert status == 404
    assert payload["code"] == "not_found"


def test_admin_ingest_requires_token(service, tmp_path):
    d = tmp_path / "new"
    d.mkdir()
    write_files(d, [("extra0.sol", generate_corpus(1, seed=77)[0][1])])
    status, payload = http("POST", url(service, "/api/corpus/ingest"),
                           {"dir": str(d)})
    assert status == 401
    assert payload["code"] == "unauthorized"
    status, delta = http("POST", url(service, "/api/corpus/ingest"),
                         {"dir": str(d)},
                         headers={"X-Admin-Token": "sesame"})
    assert status == 200
    assert delta["added"] == 1


def test_api_cli_parity_on_validate(service, corpus_files):
    source = corpus_files[5][1]
    status, via_api = http("POST", url(service, "/api/validate"),
                           {"source": source})
    assert status == 200
    via_lib = validate_contract(source, service.store, Thresholds()).to_dict()
    assert via_api == json.loads(json.dumps(via_lib))


def test_validate_during_concurrent_ingest_sees_consistent_version(
        service, tmp_path):
    store = service.store
    v0 = store.version
    batch_dir = tmp_path / "batch"
    batch_dir.mkdir()
    write_files(batch_dir, [(f"burst{i:02d}.sol", text) for i, (_, text) in
                            enumerate(generate_corpus(30, seed=91))])

    versions = []
    stop = threading.Event()

    def hammer():
        while not stop.is_set():
            status, report = http("POST", url(service, "/api/validate"),
                                  {"source": "contract T { uint q; }"})
            assert status == 200
            versions.append(report["corpus_version"])

    thread = threading.Thread(target=hammer)
    thread.start()
    try:
        ingest(DirectorySource(batch_dir), store)
    finally:
        stop.set()
        thread.join(timeout=30)
    assert versions, "no validation responses collected"
    assert set(versions) <= {v0, v0 + 1}
    status, report = http("POST", url(service, "/api/validate"),
                          {"source": "contract T { uint q; }"})
    assert report["corpus_version"] == v0 + 1
