"""Fragment extraction and token-stream normalization.

A fragment is a code unit at contract, function or statement granularity.
Its raw stream is the pre-order serialization of the fragment's subtree:
the node-kind name for every node, the operator lexeme where one exists,
and the leaf lexeme for every leaf. Normalization then blanks literal
values (NUM/STR/HEX/ADDR) and removes stop tokens, so that two sources
differing only in literals or formatting produce identical streams.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, replace

from .lexer import classify_hex
from .parser import STATEMENT_KINDS, AstNode

GRANULARITIES = ("contract", "function", "statement")

NUM_TOKEN = "NUM"
STR_TOKEN = "STR"
HEX_TOKEN = "HEX"
ADDR_TOKEN = "ADDR"
STOP_TOKENS = frozenset([";", ","])

_NUMBER_RE = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?\Z")
_HEX_RE = re.compile(r"0[xX][0-9a-fA-F]*\Z")


@dataclass(frozen=True)
class Fragment:
    fragment_id: str
    source_id: str
    granularity: str  # contract | function | statement
    span: tuple[int, int, int, int]
    parent_id: str | None
    stream: tuple[str, ...]


def serialize_stream(node: AstNode) -> tuple[str, ...]:
    """Pre-order token stream of a subtree (raw, pre-normalization)."""
    out: list[str] = []

    def visit(n: AstNode) -> None:
        out.append(n.kind)
        if n.operator is not None:
            out.append(n.operator)
        if n.leaf_lexeme is not None:
            out.append(n.leaf_lexeme)
        for child in n.children:
            visit(child)

    visit(node)
    return tuple(out)


def serialize_fragments(root: AstNode, source_id: str) -> list[Fragment]:
    """One fragment per contract, function/modifier and statement node.

    Statement fragments are nested: a statement inside an if-body yields
    its own fragment and still appears inside the enclosing fragments'
    streams. Parent ids follow the statement -> function -> contract chain.
    UnknownStatement recovery nodes are not analyzable code and yield no
    fragments.
    """
    fragments: list[Fragment] = []
    counters = {g: 0 for g in GRANULARITIES}

    def new_id(granularity: str) -> str:
        counters[granularity] += 1
        return f"{source_id}:{granularity}:{counters[granularity]:04d}"

    def visit(node: AstNode, contract_fid: str | None, function_fid: str | None) -> None:
        if node.kind == "ContractDefinition":
            fid = new_id("contract")
            fragments.append(Fragment(fid, source_id, "contract", node.span,
                                      None, serialize_stream(node)))
            contract_fid = fid
        elif node.kind in ("FunctionDefinition", "ModifierDefinition"):
            fid = new_id("function")
            fragments.append(Fragment(fid, source_id, "function", node.span,
                                      contract_fid, serialize_stream(node)))
            function_fid = fid
        elif node.kind in STATEMENT_KINDS:
            fid = new_id("statement")
            parent = function_fid if function_fid is not None else contract_fid
            fragments.append(Fragment(fid, source_id, "statement", node.span,
                                      parent, serialize_stream(node)))
        for child in node.children:
            visit(child, contract_fid, function_fid)

    visit(root, None, None)
    return fragments


def normalize_token(token: str) -> str:
    """Map literal values to their class token; everything else unchanged."""
    if not token:
        return token
    if token[0] in "'\"":
        return STR_TOKEN
    if _HEX_RE.fullmatch(token):
        return ADDR_TOKEN if classify_hex(token) == "AddressLiteral" else HEX_TOKEN
    if token[0].isdigit() and _NUMBER_RE.fullmatch(token):
        return NUM_TOKEN
    return token


def normalize(stream: tuple[str, ...]) -> tuple[str, ...]:
    """Blank literal values elementwise, then delete stop tokens.

    Idempotent: the class tokens themselves never match a literal shape.
    """
    return tuple(normalize_token(t) for t in stream if t not in STOP_TOKENS)


def normalize_fragment(fragment: Fragment) -> Fragment:
    return replace(fragment, stream=normalize(fragment.stream))


def extract_fragments(root: AstNode, source_id: str) -> list[Fragment]:
    """serialize_fragments followed by normalization of every stream."""
    return [normalize_fragment(f) for f in serialize_fragments(root, source_id)]


def stream_digest(stream: tuple[str, ...]) -> str:
    """256-bit content digest of a normalized stream."""
    joined = "\x1f".join(stream)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()


def format_streams(fragments: list[Fragment], granularity: str) -> str:
    """One fragment per line, space-joined tokens (--emit-stream output)."""
    lines = [" ".join(f.stream) for f in fragments if f.granularity == granularity]
    return "\n".join(lines)
