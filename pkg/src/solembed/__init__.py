"""solembed: structural code embeddings for Solidity smart contracts.

Pipeline: tokenize -> parse -> fragment/normalize -> embed -> similarity
search over corpus and bug matrices, exposed as a library, a CLI and an
HTTP JSON API.
"""

from .lexer import Diagnostic, LexToken, tokenize
from .parser import AstNode, SourceUnit, format_ast, parse, parse_text
from .fragments import (Fragment, GRANULARITIES, extract_fragments, normalize,
                        serialize_fragments, serialize_stream, stream_digest)
from .embedding import (EmbeddingTable, FragmentVector, Hyperparams,
                        Vocabulary, build_vocabulary, embed_fragment,
                        embed_stream, train_embeddings)
from .similarity import (MatrixCache, MatrixSnapshot, QueryHit, Thresholds,
                         batch_query, cached_snapshot, similarity)
from .store import (BugRecord, DEFAULT_BUG_CATEGORIES, SnapshotError, Store)
from .detectors import (BugHit, ClonePair, CloneReport, ValidationReport,
                        detect_corpus_bugs, detect_corpus_clones,
                        validate_contract)
from .ingestion import (DirectorySource, IngestDelta, RemoteChainSource,
                        ingest, update_model)
from .bugs import load_bug_records, sample_bug_db_path

__version__ = "0.1.0"

__all__ = [
    "AstNode", "BugHit", "BugRecord", "ClonePair", "CloneReport",
    "DEFAULT_BUG_CATEGORIES", "Diagnostic", "DirectorySource",
    "EmbeddingTable", "Fragment", "FragmentVector", "GRANULARITIES",
    "Hyperparams", "IngestDelta", "LexToken", "MatrixCache", "MatrixSnapshot",
    "QueryHit", "RemoteChainSource", "SnapshotError", "SourceUnit", "Store",
    "Thresholds", "ValidationReport", "Vocabulary", "batch_query",
    "build_vocabulary", "cached_snapshot", "detect_corpus_bugs",
    "detect_corpus_clones", "embed_fragment", "embed_stream",
    "extract_fragments", "format_ast", "ingest", "load_bug_records",
    "normalize", "parse", "parse_text", "sample_bug_db_path",
    "serialize_fragments", "serialize_stream", "similarity", "stream_digest",
    "train_embeddings", "update_model", "validate_contract",
]
