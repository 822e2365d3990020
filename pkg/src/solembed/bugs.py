"""Loading bug records from JSON files.

Authoring entries carry either `statement_streams` (canonical normalized
token streams, the snapshot format) or `statement_source` (a Solidity
statement snippet that is parsed and normalized on load, which is how the
shipped sample is written). A snippet with several statements contributes
one stream per statement.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .fragments import extract_fragments
from .parser import parse_text
from .store import BugRecord


class BugLoadError(Exception):
    pass


def streams_from_statement_source(snippet: str) -> list[tuple[str, ...]]:
    """Normalized stream per statement in a bare Solidity snippet."""
    wrapped = "contract __W { function __f() public {\n" + snippet + "\n} }"
    root, diags = parse_text(wrapped)
    errors = [d for d in diags if d.severity == "error"]
    fragments = extract_fragments(root, "bug")
    streams = [f.stream for f in fragments if f.granularity == "statement"]
    if not streams:
        detail = f": {errors[0].message}" if errors else ""
        raise BugLoadError(f"no statements recovered from snippet{detail}")
    return streams


def load_bug_records(path) -> list[BugRecord]:
    """Parse a bug database file into records ready for Store.add_bug."""
    try:
        entries = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as err:
        raise BugLoadError(f"{path}: {err}") from err
    if not isinstance(entries, list):
        raise BugLoadError(f"{path}: expected a JSON array of bug records")

    records: list[BugRecord] = []
    for i, entry in enumerate(entries):
        try:
            bug_id = entry["bug_id"]
            category = entry["category"]
        except (KeyError, TypeError) as err:
            raise BugLoadError(f"{path}: record {i} missing {err}") from err
        streams: list[tuple[str, ...]] = []
        for stream in entry.get("statement_streams", []):
            streams.append(tuple(stream))
        source = entry.get("statement_source")
        if source:
            try:
                streams.extend(streams_from_statement_source(source))
            except BugLoadError as err:
                raise BugLoadError(f"{path}: record {bug_id!r}: {err}") from err
        if not streams:
            raise BugLoadError(f"{path}: record {bug_id!r} has neither "
                               "statement_streams nor statement_source")
        records.append(BugRecord(
            bug_id=bug_id, category=category,
            statement_streams=tuple(streams),
            description=entry.get("description", ""),
            provenance=entry.get("provenance", "")))
    return records


def sample_bug_db_path() -> Path:
    """Location of the small curated bug database shipped with the package."""
    return Path(resources.files("solembed") / "data" / "sample_bugs.json")
