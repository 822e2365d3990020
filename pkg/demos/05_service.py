#!/usr/bin/env python3
"""Run the HTTP API in-process and exercise every endpoint with urllib.

Equivalent to `solembed serve --store <dir>` plus a scripted client; the
admin ingest shows the token gate and the version bump that validation
responses then report."""

import json
import tempfile
import urllib.error
import urllib.request
from pathlib import Path

from solembed import (Hyperparams, Store, Thresholds, extract_fragments,
                      parse_text, train_embeddings)
from solembed.service import Service
from solembed.embedding import embed_fragment
from solembed.ingestion import make_source_unit

CONTRACT = """\
contract Door {
    bool open;
    function knock() public { open = true; }
}
"""


def call(method, url, body=None, token=None):
    data = json.dumps(body).encode() if body is not None else None
    headers = {"X-Admin-Token": token} if token else {}
    request = urllib.request.Request(url, data=data, method=method,
                                     headers=headers)
    try:
        with urllib.request.urlopen(request, timeout=10) as response:
            return response.status, json.loads(response.read())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read())


if __name__ == "__main__":
    root, _ = parse_text(CONTRACT)
    streams = [f.stream for f in extract_fragments(root, "d")]
    table = train_embeddings(streams,
                             Hyperparams(dim=16, epochs=3, min_count=1, seed=1))
    store = Store(table)
    unit = make_source_unit("door.sol", CONTRACT)
    frags = extract_fragments(parse_text(CONTRACT)[0], unit.id)
    store.add_contract(unit, frags,
                       [embed_fragment(f, store.table) for f in frags])

    service = Service(store, Thresholds(), port=0, admin_token="demo-token")
    service.start()
    base = f"http://127.0.0.1:{service.port}"
    print(f"service listening on {base}")

    status, stats = call("GET", f"{base}/api/stats")
    print(f"\nGET /api/stats -> {status}")
    print(f"  fragments: {stats['fragments']}, version {stats['version']}")

    status, report = call("POST", f"{base}/api/validate",
                          {"source": CONTRACT})
    print(f"POST /api/validate -> {status}; top contract hit score "
          f"{report['clone_hits']['contract'][0]['score']}")

    status, err = call("POST", f"{base}/api/validate", body=None)
    print(f"POST /api/validate (no body) -> {status} {err['code']}")

    with tempfile.TemporaryDirectory() as tmp:
        (Path(tmp) / "new.sol").write_text(
            CONTRACT.replace("Door", "Gate"), encoding="utf-8")
        status, err = call("POST", f"{base}/api/corpus/ingest", {"dir": tmp})
        print(f"POST /api/corpus/ingest (no token) -> {status} {err['code']}")
        status, delta = call("POST", f"{base}/api/corpus/ingest",
                             {"dir": tmp}, token="demo-token")
        print(f"POST /api/corpus/ingest (token) -> {status}; "
              f"added {delta['added']}, version {delta['new_version']}")

    status, report = call("POST", f"{base}/api/validate",
                          {"source": CONTRACT})
    print(f"validation now reports corpus version "
          f"{report['corpus_version']}")
    service.stop()
