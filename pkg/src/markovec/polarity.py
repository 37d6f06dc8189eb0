"""Lexicon-based similarity analyses over tokenized corpora.

Given word-category lists (positive, negative, ...) and a corpus cut into
labelled slices (typically years), this module trains one skip-gram model per
slice and reports how similar the embeddings of two categories are, both as
the mean pairwise cosine over all cross-category word pairs and as the cosine
of a word against a whole category's normalized centroid. A seeded random
word group serves as the neutral baseline.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedder import TrainConfig, init_model, train_skipgram
from .errors import (
    EmptyCategory,
    EmptyCorpus,
    EmptySlice,
    NoGroupOverlap,
    ParseError,
    WordNotInVocab,
    ZeroVector,
)
from .metrics import GroupSimilarityStats
from .textgen import Corpus

RANDOM_GROUP = "Random"


@dataclass(frozen=True)
class Lexicon:
    """Named word categories, lowercase and deduplicated."""

    categories: dict[str, frozenset[str]]

    def words(self, name: str) -> frozenset[str]:
        group = self.categories.get(name)
        if not group:
            raise EmptyCategory(name)
        return group


@dataclass(frozen=True)
class TokenizedCorpusSlice:
    """A labelled bundle of documents, each a sequence of lowercase words."""

    label: str
    documents: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        if not self.label:
            raise ValueError("slice label must be non-empty")


@dataclass(frozen=True)
class VocabMap:
    """Dense word -> index map for one slice, most frequent word first."""

    word_to_index: dict[str, int]
    words: tuple[str, ...]
    min_count: int

    @property
    def size(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.word_to_index


def load_lexicon(path) -> Lexicon:
    """Read ``category,word`` CSV lines into a Lexicon."""
    categories: dict[str, set[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
                raise ParseError(line_no, line)
            category, word = parts[0].strip().lower(), parts[1].strip().lower()
            categories.setdefault(category, set()).add(word)
    return Lexicon({name: frozenset(words) for name, words in categories.items()})


def tokenize_line(line: str) -> tuple[str, ...]:
    """Whitespace split, lowercase, strip non-alphanumeric edges."""
    words = []
    for raw in line.lower().split():
        start, end = 0, len(raw)
        while start < end and not raw[start].isalnum():
            start += 1
        while end > start and not raw[end - 1].isalnum():
            end -= 1
        if start < end:
            words.append(raw[start:end])
    return tuple(words)


def load_slice(directory) -> TokenizedCorpusSlice:
    """One directory = one slice; every line of every file is a document."""
    directory = Path(directory)
    documents = []
    for file in sorted(directory.iterdir()):
        if not file.is_file():
            continue
        for line in file.read_text(encoding="utf-8").splitlines():
            words = tokenize_line(line)
            if words:
                documents.append(words)
    return TokenizedCorpusSlice(directory.name, tuple(documents))


def build_vocab(corpus_slice: TokenizedCorpusSlice, min_count: int) -> VocabMap:
    """Keep words seen at least min_count times; order by count, then word."""
    counts = Counter(
        word for document in corpus_slice.documents for word in document
    )
    if not counts:
        raise EmptySlice(corpus_slice.label)
    kept = sorted(
        (word for word, n in counts.items() if n >= min_count),
        key=lambda word: (-counts[word], word),
    )
    return VocabMap(
        word_to_index={word: i for i, word in enumerate(kept)},
        words=tuple(kept),
        min_count=min_count,
    )


def encode_slice(corpus_slice: TokenizedCorpusSlice, vocab: VocabMap) -> Corpus:
    """Map documents to token indices, dropping out-of-vocabulary words.

    Documents are concatenated but their boundaries are kept, so no training
    window ever spans two documents.
    """
    tokens: list[int] = []
    spans: list[tuple[int, int]] = []
    for document in corpus_slice.documents:
        start = len(tokens)
        tokens.extend(
            vocab.word_to_index[w] for w in document if w in vocab.word_to_index
        )
        if len(tokens) > start:
            spans.append((start, len(tokens)))
    if not tokens:
        raise EmptyCorpus(f"slice {corpus_slice.label!r} has no in-vocabulary words")
    return Corpus(np.array(tokens, dtype=np.int64), tuple(spans))


def _group_indices(vocab: VocabMap, group) -> np.ndarray:
    hits = sorted(vocab.word_to_index[w] for w in group if w in vocab.word_to_index)
    if not hits:
        raise NoGroupOverlap(set(group))
    return np.array(hits, dtype=np.int64)


def mean_pairwise_cosine(
    W: np.ndarray, vocab: VocabMap, group_a, group_b
) -> GroupSimilarityStats:
    """Mean/std of embedding cosines over all cross-group word pairs.

    Same-word pairs are excluded when the two groups are the same set. The
    pair values are sorted before aggregation, so swapping the groups returns
    bit-identical statistics.
    """
    idx_a = _group_indices(vocab, group_a)
    idx_b = _group_indices(vocab, group_b)
    W = np.asarray(W, dtype=float)
    norms = np.sqrt((W * W).sum(axis=1))
    for idx in np.concatenate([idx_a, idx_b]):
        if norms[idx] == 0.0:
            raise ZeroVector(int(idx))
    units = W / norms[:, None]
    sims = units[idx_a] @ units[idx_b].T
    if set(group_a) == set(group_b):
        keep = idx_a[:, None] != idx_b[None, :]
        values = sims[keep]
    else:
        values = sims.ravel()
    values = np.sort(values)
    if values.size == 0:
        raise NoGroupOverlap(set(group_a))
    return GroupSimilarityStats(
        mean=float(values.mean()), std=float(values.std()), count=int(values.size)
    )


def centroid_cosine(W: np.ndarray, vocab: VocabMap, group, word: str) -> float:
    """Cosine between a word and the normalized sum of a group's unit vectors."""
    if word not in vocab.word_to_index:
        raise WordNotInVocab(word)
    idx_group = _group_indices(vocab, group)
    W = np.asarray(W, dtype=float)
    norms = np.sqrt((W * W).sum(axis=1))
    for idx in idx_group:
        if norms[idx] == 0.0:
            raise ZeroVector(int(idx))
    centroid = (W[idx_group] / norms[idx_group, None]).sum(axis=0)
    centroid_norm = float(np.sqrt(centroid @ centroid))
    if centroid_norm == 0.0:
        raise ZeroVector()
    word_idx = vocab.word_to_index[word]
    if norms[word_idx] == 0.0:
        raise ZeroVector(word_idx)
    return float((centroid @ W[word_idx]) / (centroid_norm * norms[word_idx]))


@dataclass(frozen=True)
class EmbedSettings:
    """Per-slice training knobs for the report pipeline."""

    dim: int
    width: int
    min_count: int = 5
    learning_rate: float = 1e-4
    epochs: int = 5
    seed: int = 0
    log_every: int = 100_000


@dataclass(frozen=True)
class PolarityRow:
    slice_label: str
    group_a: str
    group_b: str
    mean: float
    std: float
    pairs: int


def polarity_report(
    slices,
    lexicon: Lexicon,
    categories,
    n_random: int | None,
    settings: EmbedSettings,
    exclude_slices=(),
) -> list[PolarityRow]:
    """Train one model per slice and tabulate category-pair similarities.

    Emits one row per slice for every unordered category pair (including a
    category with itself) and, when n_random > 0, one row per category
    against a random vocabulary sample of that size. n_random=None defaults
    to the size of the first requested category. The random sample is drawn
    once per slice from a seed derived from the slice index, so reports are
    reproducible end to end.
    """
    categories = list(categories)
    if not categories:
        raise EmptyCategory("<none requested>")
    rows: list[PolarityRow] = []
    excluded = set(exclude_slices)
    for slice_index, corpus_slice in enumerate(slices):
        if corpus_slice.label in excluded:
            continue
        vocab = build_vocab(corpus_slice, settings.min_count)
        corpus = encode_slice(corpus_slice, vocab)
        slice_seed = settings.seed + slice_index
        model = init_model(vocab.size, settings.dim, settings.width, slice_seed)
        config = TrainConfig(
            learning_rate=settings.learning_rate,
            epochs=settings.epochs,
            seed=slice_seed,
            log_every=settings.log_every,
        )
        trained, _ = train_skipgram(model, corpus, config)

        sample_size = n_random
        if sample_size is None:
            sample_size = len(lexicon.words(categories[0]))
        random_group: frozenset[str] = frozenset()
        if sample_size > 0:
            rng = np.random.default_rng(slice_seed)
            chosen = rng.choice(
                vocab.size, size=min(sample_size, vocab.size), replace=False
            )
            random_group = frozenset(vocab.words[i] for i in chosen)

        for a_pos, name_a in enumerate(categories):
            for name_b in categories[a_pos:]:
                stats = mean_pairwise_cosine(
                    trained.W, vocab, lexicon.words(name_a), lexicon.words(name_b)
                )
                rows.append(PolarityRow(
                    corpus_slice.label, name_a, name_b,
                    stats.mean, stats.std, stats.count,
                ))
            if random_group:
                stats = mean_pairwise_cosine(
                    trained.W, vocab, lexicon.words(name_a), random_group
                )
                rows.append(PolarityRow(
                    corpus_slice.label, name_a, RANDOM_GROUP,
                    stats.mean, stats.std, stats.count,
                ))
    return rows


POLARITY_CSV_COLUMNS = ("slice", "groupA", "groupB", "mean", "std", "pairs")
POLARITY_SCHEMA = "polarity-v1"


def write_polarity_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# schema={POLARITY_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(POLARITY_CSV_COLUMNS)
        for row in rows:
            writer.writerow([
                row.slice_label, row.group_a, row.group_b,
                f"{row.mean:.17g}", f"{row.std:.17g}", row.pairs,
            ])
