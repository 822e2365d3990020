"""Token embedding learning and fragment vector composition.

Trains skip-gram vectors with negative sampling over normalized token
streams, single-threaded and bit-reproducible for a fixed seed. Fragment
vectors are the plain sum of their in-vocabulary token vectors; the table
is frozen once training returns and out-of-vocabulary tokens are skipped
(and counted, as the retrain signal for incremental ingestion).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

FINAL_LR = 1e-4
NOISE_POWER = 0.75
_NEGATIVE_BUFFER = 8192


@dataclass(frozen=True)
class Vocabulary:
    """Dense token ids ordered by (frequency desc, token asc).

    Frequencies are training-time metadata; they are not persisted in the
    embedding file format, so tables loaded from disk carry ids only.
    """

    tokens: tuple[str, ...]              # id -> token
    frequencies: tuple[int, ...]         # id -> corpus count
    min_count: int
    index: dict[str, int] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.index:
            object.__setattr__(self, "index",
                               {t: i for i, t in enumerate(self.tokens)})

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int | None:
        return self.index.get(token)


@dataclass(frozen=True)
class Hyperparams:
    dim: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 10
    initial_lr: float = 0.025
    min_count: int = 2
    seed: int = 1

    def __post_init__(self):
        for name in ("dim", "window", "negatives", "epochs", "min_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.initial_lr <= 0:
            raise ValueError("initial_lr must be positive")


@dataclass(frozen=True)
class FragmentVector:
    """Composed fragment embedding plus OOV accounting."""

    vector: np.ndarray
    token_count: int
    oov_count: int
    is_degenerate: bool  # empty or all-OOV stream (zero vector)

    @property
    def oov_rate(self) -> float:
        return self.oov_count / self.token_count if self.token_count else 0.0


class EmbeddingTable:
    """Frozen token -> vector map of fixed dimension."""

    def __init__(self, vocab: Vocabulary, vectors: np.ndarray):
        if vectors.ndim != 2 or vectors.shape[0] != len(vocab):
            raise ValueError("vectors must be a (V, d) matrix")
        if not np.isfinite(vectors).all():
            raise ValueError("embedding vectors must be finite")
        self.vocab = vocab
        self.vectors = np.ascontiguousarray(vectors, dtype=np.float64)
        self.vectors.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def vector(self, token: str) -> np.ndarray | None:
        idx = self.vocab.id_of(token)
        return self.vectors[idx] if idx is not None else None

    def save(self, path) -> None:
        """word2vec text convention: first line 'V d', then one token per line."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(self.vocab)} {self.dim}\n")
            for token, row in zip(self.vocab.tokens, self.vectors):
                if any(c.isspace() for c in token):
                    raise ValueError(f"token {token!r} contains whitespace")
                fh.write(token + " "
                         + " ".join(repr(float(x)) for x in row) + "\n")

    @classmethod
    def load(cls, path) -> "EmbeddingTable":
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise ValueError(f"{path}: malformed embedding header")
            count, dim = int(header[0]), int(header[1])
            tokens: list[str] = []
            rows = np.empty((count, dim), dtype=np.float64)
            for i in range(count):
                line = fh.readline()
                if not line:
                    raise ValueError(f"{path}: truncated after {i} of {count} vectors")
                parts = line.rstrip("\n").split(" ")
                if len(parts) != dim + 1:
                    raise ValueError(f"{path}: bad vector line {i + 2}")
                tokens.append(parts[0])
                rows[i] = [float(x) for x in parts[1:]]
        vocab = Vocabulary(tokens=tuple(tokens),
                           frequencies=tuple(0 for _ in tokens), min_count=0)
        return cls(vocab, rows)


def build_vocabulary(streams, min_count: int = 2) -> Vocabulary:
    """Count token occurrences across streams, drop rare tokens, assign ids."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter()
    for stream in streams:
        counts.update(stream)
    kept = [(t, c) for t, c in counts.items() if c >= min_count]
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    return Vocabulary(tokens=tuple(t for t, _ in kept),
                      frequencies=tuple(c for _, c in kept),
                      min_count=min_count)


class _NoiseSampler:
    """Buffered draws from the unigram^0.75 noise distribution."""

    def __init__(self, frequencies, rng: np.random.Generator):
        weights = np.asarray(frequencies, dtype=np.float64) ** NOISE_POWER
        self._cdf = np.cumsum(weights / weights.sum())
        self._rng = rng
        self._buffer = np.empty(0, dtype=np.int64)
        self._used = 0

    def draw(self, count: int) -> np.ndarray:
        if self._used + count > len(self._buffer):
            uniforms = self._rng.random(_NEGATIVE_BUFFER)
            self._buffer = np.searchsorted(self._cdf, uniforms, side="right")
            self._used = 0
        out = self._buffer[self._used:self._used + count]
        self._used += count
        return out


def train_embeddings(streams, hp: Hyperparams = Hyperparams()) -> EmbeddingTable:
    """Skip-gram with negative sampling over the given token streams.

    For every position t, a window size is drawn uniformly from
    1..hp.window; each in-window context gets one positive update and
    exactly hp.negatives negative updates against the unigram^0.75 noise
    distribution. A negative draw may hit the positive target; the update
    is performed anyway (no resampling or skipping, so tiny vocabularies
    behave the same way as large ones). The learning rate decays linearly
    from hp.initial_lr to FINAL_LR over all scheduled positions. Returns
    the input-side matrix.
    """
    streams = list(streams)
    vocab = build_vocabulary(streams, hp.min_count)
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty after min_count filtering; "
                         "nothing to train on")

    encoded: list[np.ndarray] = []
    for stream in streams:
        ids = [vocab.index[t] for t in stream if t in vocab.index]
        if ids:
            encoded.append(np.asarray(ids, dtype=np.int64))

    rng = np.random.default_rng(hp.seed)
    dim = hp.dim
    syn0 = (rng.random((len(vocab), dim)) - 0.5) / dim
    syn1 = np.zeros((len(vocab), dim), dtype=np.float64)
    noise = _NoiseSampler(vocab.frequencies, rng)

    total_positions = sum(len(s) for s in encoded) * hp.epochs
    lr_span = FINAL_LR - hp.initial_lr
    processed = 0
    width = 1 + hp.negatives
    rows = np.empty(width, dtype=np.int64)
    labels = np.zeros(width)
    labels[0] = 1.0

    # exp() may overflow for saturated pairs; 1/(1+inf) -> 0 is the right
    # limit, so silence just that warning for the duration of training
    old_err = np.seterr(over="ignore")
    try:
        for _epoch in range(hp.epochs):
            for sent in encoded:
                length = len(sent)
                for t in range(length):
                    lr = hp.initial_lr + lr_span * (processed / total_positions)
                    processed += 1
                    reach = int(rng.integers(1, hp.window + 1))
                    lo = max(0, t - reach)
                    hi = min(length, t + reach + 1)
                    center = sent[t]
                    l1 = syn0[center]  # view; in-place updates hit syn0
                    for c in range(lo, hi):
                        if c == t:
                            continue
                        rows[0] = sent[c]
                        rows[1:] = noise.draw(hp.negatives)
                        out = syn1[rows]  # copy: gradients see old values
                        gains = (labels - 1.0 / (1.0 + np.exp(-(out @ l1)))) * lr
                        deltas = gains[:, None] * l1[None, :]
                        row_list = rows.tolist()
                        if len(set(row_list)) == width:
                            syn1[rows] += deltas
                        else:  # repeated rows must accumulate sequentially
                            for i, row in enumerate(row_list):
                                syn1[row] += deltas[i]
                        l1 += gains @ out
    finally:
        np.seterr(**old_err)

    if not np.isfinite(syn0).all():
        raise ValueError("training diverged: non-finite vectors")
    return EmbeddingTable(vocab, syn0)


def embed_stream(stream, table: EmbeddingTable) -> FragmentVector:
    """Sum of in-vocabulary token vectors; OOV tokens are skipped."""
    ids = []
    oov = 0
    total = 0
    for token in stream:
        total += 1
        idx = table.vocab.id_of(token)
        if idx is None:
            oov += 1
        else:
            ids.append(idx)
    if not ids:
        return FragmentVector(vector=np.zeros(table.dim), token_count=total,
                              oov_count=oov, is_degenerate=True)
    # summing in sorted-id order makes the result independent of token order
    order = np.sort(np.asarray(ids, dtype=np.int64))
    vector = table.vectors[order].sum(axis=0)
    return FragmentVector(vector=vector, token_count=total, oov_count=oov,
                          is_degenerate=False)


def embed_fragment(fragment, table: EmbeddingTable) -> FragmentVector:
    return embed_stream(fragment.stream, table)
