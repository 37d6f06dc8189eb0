"""Evaluation metrics: cross-entropy against a reference, probability-dot
similarity, group distances, and block-structure statistics.

The central quantity is the unnormalized scalar product between a model's
predicted context distribution and a row of the reference context matrix,

    sim(i, i') = forward(model, i) . reference_row(i'),

which is 1 only when both concentrate on the same single word and 1/V when
both are uniform. The learning-trace distance is one minus the diagonal mean
of this similarity; group distances subtract the mean over a pair of index
sets. The mean skip-gram loss itself tends, on long Markov-generated corpora,
to the stationary-weighted cross-entropy computed by expected_cross_entropy,
so both views measure the same recovery problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedder import Word2VecModel, forward, forward_all
from .errors import (
    BlockOverflow,
    DimensionMismatch,
    EmptyGroup,
    IndexOutOfRange,
    NonpositiveModelProb,
    ZeroVector,
)
from .kernel import BlockSpec, ProbVector, ReferenceModel


@dataclass(frozen=True)
class GroupSimilarityStats:
    """Mean/std (population) of a similarity over a set of index pairs."""

    mean: float
    std: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise EmptyGroup("statistics need at least one pair")


def _stats(values: np.ndarray) -> GroupSimilarityStats:
    if values.size == 0:
        raise EmptyGroup()
    return GroupSimilarityStats(
        mean=float(values.mean()), std=float(values.std()), count=int(values.size)
    )


def cross_entropy_row(ref_row: ProbVector, model_probs: ProbVector) -> float:
    """-sum_j ref[j] * log(model[j]); model probabilities must be positive."""
    ref = np.asarray(ref_row, dtype=float)
    probs = np.asarray(model_probs, dtype=float)
    if ref.shape != probs.shape:
        raise DimensionMismatch(ref.shape, probs.shape)
    nonpositive = np.nonzero(probs <= 0)[0]
    if nonpositive.size:
        i = int(nonpositive[0])
        raise NonpositiveModelProb(i, float(probs[i]))
    return float(-(ref * np.log(probs)).sum())


def expected_cross_entropy(
    model: Word2VecModel, rm: ReferenceModel, mu: ProbVector
) -> float:
    """Stationary-weighted cross-entropy of reference rows vs model rows."""
    mu = np.asarray(mu, dtype=float)
    if model.vocab_size != rm.dim or mu.shape[0] != rm.dim:
        raise DimensionMismatch(rm.dim, (model.vocab_size, mu.shape[0]))
    predicted = forward_all(model)
    flat = np.argmin(predicted)
    if predicted.flat[flat] <= 0:
        raise NonpositiveModelProb(int(flat), float(predicted.flat[flat]))
    ref = rm.context_probs.probs
    return float(-(mu[:, None] * ref * np.log(predicted)).sum())


def prob_dot_similarity(
    model: Word2VecModel, rm: ReferenceModel, i: int, i2: int
) -> float:
    """Dot product of the model's predicted row i with reference row i2."""
    if model.vocab_size != rm.dim:
        raise DimensionMismatch(rm.dim, model.vocab_size)
    if not 0 <= i2 < rm.dim:
        raise IndexOutOfRange(i2, rm.dim)
    return float(forward(model, i) @ rm.context_probs.probs[i2])


def _similarity_matrix(model: Word2VecModel, rm: ReferenceModel) -> np.ndarray:
    """All pairwise prob-dot similarities: entry (i, i2)."""
    if model.vocab_size != rm.dim:
        raise DimensionMismatch(rm.dim, model.vocab_size)
    return forward_all(model) @ rm.context_probs.probs.T


def group_distance(model: Word2VecModel, rm: ReferenceModel, group1, group2) -> float:
    """1 minus the mean prob-dot similarity over the product of two groups."""
    g1 = np.asarray(sorted(group1), dtype=np.int64)
    g2 = np.asarray(sorted(group2), dtype=np.int64)
    if g1.size == 0 or g2.size == 0:
        raise EmptyGroup("both groups must be non-empty")
    for g in (g1, g2):
        if g.min() < 0 or g.max() >= rm.dim:
            raise IndexOutOfRange(int(g.max()), rm.dim)
    sims = _similarity_matrix(model, rm)[np.ix_(g1, g2)]
    return float(1.0 - sims.mean())


def trace_cosine_distance(model: Word2VecModel, rm: ReferenceModel) -> float:
    """1 minus the mean over words of sim(i, i): the learning-curve metric."""
    sims = _similarity_matrix(model, rm)
    return float(1.0 - np.diagonal(sims).mean())


def block_similarity_stats(
    model: Word2VecModel, rm: ReferenceModel, spec: BlockSpec
) -> tuple[GroupSimilarityStats, GroupSimilarityStats]:
    """Prob-dot similarity aggregated inside vs across duplicated-row blocks.

    Both aggregates run over ordered pairs (i, i2), i != i2, restricted to
    the structured rows; rows outside the blocks are ignored. A single block
    has no cross-block pairs, which surfaces as EmptyGroup.
    """
    structured = spec.structured_rows
    if structured > rm.dim:
        raise BlockOverflow(spec.num_blocks, spec.block_size, rm.dim)
    sims = _similarity_matrix(model, rm)[:structured, :structured]
    ids = np.arange(structured) // spec.block_size
    same_block = ids[:, None] == ids[None, :]
    off_diagonal = ~np.eye(structured, dtype=bool)
    intra = _stats(sims[same_block & off_diagonal])
    if spec.num_blocks < 2:
        raise EmptyGroup("a single block has no cross-block pairs")
    inter = _stats(sims[~same_block])
    return intra, inter


def embedding_cosine(W: np.ndarray, i: int, j: int) -> float:
    """Plain normalized cosine between two embedding rows."""
    W = np.asarray(W, dtype=float)
    for index in (i, j):
        if not 0 <= index < W.shape[0]:
            raise IndexOutOfRange(index, W.shape[0])
    u, v = W[i], W[j]
    norm_u = float(np.sqrt(u @ u))
    norm_v = float(np.sqrt(v @ v))
    if norm_u == 0.0:
        raise ZeroVector(i)
    if norm_v == 0.0:
        raise ZeroVector(j)
    return float((u @ v) / (norm_u * norm_v))


TRACE_CSV_COLUMNS = (
    "step",
    "mean_loss",
    "cosine_distance",
    "intra_mean",
    "intra_std",
    "inter_mean",
    "inter_std",
)
