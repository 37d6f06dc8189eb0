"""Corpus sampling from Markov models and empirical estimation back from text.

The generative direction draws token streams X_1..X_T with X_{k+1} given
X_k = i distributed as row i of the kernel. The estimation direction inverts
it: token frequencies approximate the stationary distribution, and the
per-offset conditional frequencies, averaged over offsets 1..C, approximate
the width-C context matrix. Both estimates converge by ergodicity as T grows.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyCorpus, IndexOutOfRange, NotIrreducible
from .kernel import (
    ProbVector,
    ReferenceModel,
    StochasticMatrix,
    is_irreducible,
    validate_prob_vector,
    validate_stochastic,
)


@dataclass(frozen=True)
class MarkovModel:
    """Irreducible transition kernel plus an initial distribution."""

    kernel: StochasticMatrix
    initial: ProbVector | None = None

    def __post_init__(self):
        if not is_irreducible(self.kernel):
            raise NotIrreducible()
        if self.initial is None:
            uniform = np.full(self.kernel.dim, 1.0 / self.kernel.dim)
            uniform.setflags(write=False)
            object.__setattr__(self, "initial", uniform)
        else:
            object.__setattr__(
                self, "initial", validate_prob_vector(self.initial, self.kernel.dim)
            )

    @property
    def dim(self) -> int:
        return self.kernel.dim


@dataclass(frozen=True)
class Corpus:
    """Token-index stream, optionally split into documents.

    `doc_spans` lists half-open [start, end) ranges; training and estimation
    windows never cross a span boundary. A corpus sampled from a Markov model
    is a single span.
    """

    tokens: np.ndarray
    doc_spans: tuple[tuple[int, int], ...] = field(default=None)

    def __post_init__(self):
        tokens = np.asarray(self.tokens, dtype=np.int64)
        if tokens.ndim != 1 or tokens.size < 1:
            raise EmptyCorpus("corpus must hold at least one token")
        if tokens.min() < 0:
            raise IndexOutOfRange(int(tokens.min()), 0)
        tokens = tokens.copy()
        tokens.setflags(write=False)
        object.__setattr__(self, "tokens", tokens)
        if self.doc_spans is None:
            object.__setattr__(self, "doc_spans", ((0, tokens.size),))
        else:
            spans = tuple((int(a), int(b)) for a, b in self.doc_spans)
            covered = sum(b - a for a, b in spans)
            if covered != tokens.size or any(a >= b for a, b in spans):
                raise ValueError(f"doc_spans {spans} do not tile {tokens.size} tokens")
            object.__setattr__(self, "doc_spans", spans)

    def __len__(self) -> int:
        return self.tokens.size

    def pivot_positions(self, width: int) -> np.ndarray:
        """Positions k whose full window k+1..k+width stays inside one span."""
        parts = [
            np.arange(start, end - width, dtype=np.int64)
            for start, end in self.doc_spans
            if end - start > width
        ]
        if not parts:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(parts)


def sample_corpus(model: MarkovModel, length: int, seed: int) -> Corpus:
    """Draw a token stream of the given length from the Markov model.

    One uniform draw per token, applied to the precomputed inverse CDF of the
    current row, so the stream is bit-reproducible for a fixed seed.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(seed)
    cdf_rows = [row.cumsum().tolist() for row in model.kernel.probs]
    last = model.dim - 1
    uniforms = rng.random(length).tolist()
    tokens = np.empty(length, dtype=np.int64)
    state = min(bisect_right(model.initial.cumsum().tolist(), uniforms[0]), last)
    tokens[0] = state
    for k in range(1, length):
        state = min(bisect_right(cdf_rows[state], uniforms[k]), last)
        tokens[k] = state
    return Corpus(tokens)


def empirical_unigram(corpus: Corpus, vocab_size: int) -> ProbVector:
    """Relative frequency of each token index."""
    _check_tokens(corpus, vocab_size)
    counts = np.bincount(corpus.tokens, minlength=vocab_size)
    freqs = counts / corpus.tokens.size
    freqs.setflags(write=False)
    return freqs


def empirical_reference(
    corpus: Corpus, vocab_size: int, width: int
) -> tuple[ReferenceModel, np.ndarray]:
    """Estimate the width-C context matrix from a token stream.

    Row i averages, over offsets c = 1..C, the empirical distribution of
    X_{k+c} given X_k = i; only pivots whose whole window fits inside a
    document span are counted. Words never seen as pivots get a uniform row
    and a False in the returned mask.
    """
    _check_tokens(corpus, vocab_size)
    if len(corpus) <= width:
        raise EmptyCorpus(f"need more than width={width} tokens, got {len(corpus)}")
    pivots = corpus.pivot_positions(width)
    if pivots.size == 0:
        raise EmptyCorpus("no window fits inside any document span")
    tokens = corpus.tokens
    counts = np.zeros((vocab_size, vocab_size))
    for offset in range(1, width + 1):
        flat = np.bincount(
            tokens[pivots] * vocab_size + tokens[pivots + offset],
            minlength=vocab_size * vocab_size,
        )
        counts += flat.reshape(vocab_size, vocab_size)
    pivot_counts = np.bincount(tokens[pivots], minlength=vocab_size)
    seen = pivot_counts > 0
    rows = np.full((vocab_size, vocab_size), 1.0 / vocab_size)
    rows[seen] = counts[seen] / (width * pivot_counts[seen, None])
    rows /= rows.sum(axis=1, keepdims=True)
    return ReferenceModel(validate_stochastic(rows), width), seen


def _check_tokens(corpus: Corpus, vocab_size: int) -> None:
    top = int(corpus.tokens.max())
    if top >= vocab_size:
        raise IndexOutOfRange(top, vocab_size)


# -- serialization -----------------------------------------------------------

def save_corpus(corpus: Corpus, path, vocab_size: int | None = None,
                seed: int | None = None) -> None:
    """One token per line, with an optional ``# V=.. seed=..`` comment."""
    with open(path, "w", encoding="utf-8") as fh:
        meta = []
        if vocab_size is not None:
            meta.append(f"V={vocab_size}")
        if seed is not None:
            meta.append(f"seed={seed}")
        if meta:
            fh.write("# " + " ".join(meta) + "\n")
        fh.write("\n".join(str(int(t)) for t in corpus.tokens) + "\n")


def load_corpus(path) -> tuple[Corpus, int | None]:
    """Returns the corpus and the vocabulary size from the header, if any."""
    vocab_size = None
    tokens = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for item in line[1:].split():
                    if item.startswith("V="):
                        vocab_size = int(item[2:])
                continue
            tokens.append(int(line))
    return Corpus(np.array(tokens, dtype=np.int64)), vocab_size
