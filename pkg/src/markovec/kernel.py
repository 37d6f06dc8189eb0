"""Stochastic-matrix algebra for Markov text models.

A transition kernel K (row-stochastic, V x V) induces a context-probability
matrix: the average of its first C powers. Row i of that matrix is the
probability of each word appearing among the C words following word i, so it
is the natural target a width-C word2vec tries to learn. This module builds
random and block-structured kernels, computes stationary distributions, maps
kernels to context matrices and back (through the symmetric eigendecomposition
and the scalar map x -> (1/C) * sum_{i<=C} x^i, which is a bijection of [0,1]),
and performs the exact duplicate-row compression that motivates the whole
interchangeable-word story: two identical rows can be merged without loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BlockOverflow,
    DomainError,
    EigenvalueOutOfRange,
    NegativeEntry,
    NoConvergence,
    NotIrreducible,
    NotSymmetric,
    RowsNotEqual,
    RowSumViolation,
)

ROW_SUM_TOL = 1e-12
PROB_VEC_TOL = 1e-12
SYMMETRY_TOL = 1e-10
EIGENVALUE_CLAMP = 1e-10
DUPLICATE_ROW_TOL = 1e-12
POWER_ITERATION_TOL = 1e-12
POWER_ITERATION_CAP = 10**6

# A probability vector is a plain float ndarray; see validate_prob_vector.
ProbVector = np.ndarray


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class StochasticMatrix:
    """Row-stochastic square matrix; every instance is validated on build."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or probs.shape[0] != probs.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {probs.shape}")
        if not np.all(np.isfinite(probs)):
            raise ValueError("matrix has non-finite entries")
        neg = np.argwhere(probs < 0)
        if neg.size:
            i, j = map(int, neg[0])
            raise NegativeEntry(i, j, float(probs[i, j]))
        sums = probs.sum(axis=1)
        bad = np.nonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)[0]
        if bad.size:
            i = int(bad[0])
            raise RowSumViolation(i, float(sums[i]))
        object.__setattr__(self, "probs", _freeze(probs))

    @property
    def dim(self) -> int:
        return self.probs.shape[0]


@dataclass(frozen=True)
class ReferenceModel:
    """Width-C context-probability matrix.

    Equivalent to a word2vec whose embedding is the identity; its rows are
    already probabilities, so no softmax is ever applied to them.
    """

    context_probs: StochasticMatrix
    width: int

    def __post_init__(self):
        if self.width < 1:
            raise ValueError(f"width must be >= 1, got {self.width}")

    @property
    def dim(self) -> int:
        return self.context_probs.dim


@dataclass(frozen=True)
class BlockSpec:
    """B contiguous blocks of S duplicated rows at the top of the matrix."""

    num_blocks: int
    block_size: int

    def __post_init__(self):
        if self.num_blocks < 1 or self.block_size < 1:
            raise ValueError("num_blocks and block_size must be >= 1")

    @property
    def structured_rows(self) -> int:
        return self.num_blocks * self.block_size

    def block_of(self, index: int) -> int:
        """Block id of a structured row index."""
        return index // self.block_size


def validate_stochastic(raw) -> StochasticMatrix:
    """Check nonnegativity and unit row sums (within 1e-12) and wrap."""
    return StochasticMatrix(np.asarray(raw, dtype=float))


def validate_prob_vector(raw, dim: int | None = None) -> ProbVector:
    """Check a nonnegative vector summing to 1 within 1e-12; returns a copy."""
    vec = np.array(raw, dtype=float)
    if vec.ndim != 1:
        raise ValueError(f"expected a vector, got shape {vec.shape}")
    if dim is not None and vec.shape[0] != dim:
        raise ValueError(f"expected dimension {dim}, got {vec.shape[0]}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("vector has non-finite entries")
    neg = np.nonzero(vec < 0)[0]
    if neg.size:
        i = int(neg[0])
        raise NegativeEntry(i, 0, float(vec[i]))
    total = float(vec.sum())
    if abs(total - 1.0) > PROB_VEC_TOL:
        raise RowSumViolation(0, total)
    vec.setflags(write=False)
    return vec


def random_kernel(dim: int, seed: int) -> StochasticMatrix:
    """Kernel with rows drawn uniformly on the probability simplex.

    Each row is Dirichlet(1, ..., 1), realized as independent standard
    exponential draws normalized to sum 1. Deterministic given the seed.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    rows = rng.standard_exponential((dim, dim))
    rows /= rows.sum(axis=1, keepdims=True)
    return StochasticMatrix(rows)


def block_kernel(dim: int, spec: BlockSpec, seed: int) -> StochasticMatrix:
    """Kernel whose top B*S rows form B blocks of bit-identical rows.

    Words sharing a block are exactly interchangeable: their context
    distributions coincide. Block rows and the V - B*S free rows are all
    simplex-uniform as in random_kernel, drawn from one seeded stream
    (block rows first, then free rows).
    """
    structured = spec.structured_rows
    if structured > dim:
        raise BlockOverflow(spec.num_blocks, spec.block_size, dim)
    rng = np.random.default_rng(seed)
    block_rows = rng.standard_exponential((spec.num_blocks, dim))
    block_rows /= block_rows.sum(axis=1, keepdims=True)
    rows = np.empty((dim, dim))
    rows[:structured] = np.repeat(block_rows, spec.block_size, axis=0)
    if structured < dim:
        free = rng.standard_exponential((dim - structured, dim))
        free /= free.sum(axis=1, keepdims=True)
        rows[structured:] = free
    return StochasticMatrix(rows)


def _strongly_connected(support: np.ndarray) -> bool:
    """True when every node reaches and is reached by node 0."""
    def reaches_all(adj: np.ndarray) -> bool:
        reached = np.zeros(adj.shape[0], dtype=bool)
        reached[0] = True
        frontier = reached.copy()
        while frontier.any():
            nxt = adj[frontier].any(axis=0) & ~reached
            reached |= nxt
            frontier = nxt
        return bool(reached.all())

    return reaches_all(support) and reaches_all(support.T)


def is_irreducible(kernel: StochasticMatrix) -> bool:
    return _strongly_connected(kernel.probs > 0)


def stationary(
    kernel: StochasticMatrix,
    tol: float = POWER_ITERATION_TOL,
    max_iterations: int = POWER_ITERATION_CAP,
) -> ProbVector:
    """Stationary distribution mu with mu K = mu, by power iteration.

    Starts from the uniform vector and stops once successive iterates are
    within `tol` in L1. Raises NotIrreducible when the support graph is not
    strongly connected, and NoConvergence (carrying the Cesaro average of the
    iterates, which still converges for periodic chains) at the cap.
    """
    if not is_irreducible(kernel):
        raise NotIrreducible()
    probs = kernel.probs
    mu = np.full(kernel.dim, 1.0 / kernel.dim)
    cesaro = np.zeros_like(mu)
    for iteration in range(1, max_iterations + 1):
        nxt = mu @ probs
        cesaro += nxt
        if np.abs(nxt - mu).sum() < tol:
            nxt = nxt / nxt.sum()
            nxt.setflags(write=False)
            return nxt
        mu = nxt
    average = cesaro / cesaro.sum()
    raise NoConvergence(max_iterations, average)


def reference_from_kernel(kernel: StochasticMatrix, width: int) -> ReferenceModel:
    """Context matrix of a width-C window: (1/C) * (K + K^2 + ... + K^C)."""
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    probs = kernel.probs
    acc = probs.copy()
    power = probs
    for _ in range(width - 1):
        power = power @ probs
        acc += power
    acc /= width
    # guard against accumulated round-off before re-validating
    acc /= acc.sum(axis=1, keepdims=True)
    return ReferenceModel(StochasticMatrix(acc), width)


def geometric_sum_map(x: float, width: int) -> float:
    """(1/C) * sum_{i=1..C} x^i; strictly increasing from [0,1] onto [0,1]."""
    if not 0.0 <= x <= 1.0:
        raise DomainError(x, 0.0, 1.0)
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    acc = 0.0
    for _ in range(width):
        acc = x * (1.0 + acc)
    return acc / width


_BISECTION_STEPS = 60  # interval shrinks below double-precision resolution


def invert_geometric_sum(y: float, width: int) -> float:
    """Inverse of geometric_sum_map on [0, 1], by bisection.

    Monotonicity makes the bisection unconditionally convergent; 60 halvings
    take the bracket below 1e-18, so the image of the returned point matches
    y to within 1e-12 everywhere on the interval.
    """
    if not 0.0 <= y <= 1.0:
        raise DomainError(y, 0.0, 1.0)
    if y == 0.0 or y == 1.0:
        return y
    lo, hi = 0.0, 1.0
    for _ in range(_BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        if geometric_sum_map(mid, width) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def kernel_from_reference(rm: ReferenceModel) -> StochasticMatrix:
    """Recover the kernel whose width-C context matrix equals rm.

    Requires a symmetric context matrix with eigenvalues in [0, 1]: write
    W = P D P^T and apply the inverse of the geometric-sum map to each
    eigenvalue, giving K = P g^{-1}(D) P^T. Eigenvalues within 1e-10 of the
    interval are clamped; anything further out is rejected. Tiny negative
    entries produced by round-off are clipped and rows renormalized, but a
    genuinely negative entry (possible for symmetric inputs that do not come
    from an actual kernel) surfaces as NegativeEntry.
    """
    probs = rm.context_probs.probs
    asymmetry = float(np.abs(probs - probs.T).max())
    if asymmetry > SYMMETRY_TOL:
        raise NotSymmetric(asymmetry)
    symmetric = 0.5 * (probs + probs.T)
    eigenvalues, eigenvectors = np.linalg.eigh(symmetric)
    for value in eigenvalues:
        if value < -EIGENVALUE_CLAMP or value > 1.0 + EIGENVALUE_CLAMP:
            raise EigenvalueOutOfRange(float(value))
    clamped = np.clip(eigenvalues, 0.0, 1.0)
    inverted = np.array([invert_geometric_sum(float(v), rm.width) for v in clamped])
    recovered = (eigenvectors * inverted) @ eigenvectors.T
    recovered[(recovered < 0) & (recovered > -EIGENVALUE_CLAMP)] = 0.0
    row_sums = recovered.sum(axis=1)
    if np.all(np.abs(row_sums - 1.0) < 1e-9):
        recovered /= row_sums[:, None]
    return StochasticMatrix(recovered)


def compress_duplicates(rm: ReferenceModel, keep: int, drop: int):
    """Merge two identical rows of the context matrix without loss.

    Returns (merge_map, reduced): merge_map is the V x (V-1) identity with
    column `drop` removed and a 1 where row `drop` meets the kept column;
    reduced is the context matrix with row `drop` deleted. Their product
    reconstructs the original matrix exactly, entry for entry: the map only
    selects rows, so no arithmetic beyond copying happens.
    """
    dim = rm.dim
    for index in (keep, drop):
        if not 0 <= index < dim:
            raise ValueError(f"row index {index} outside [0, {dim})")
    if keep == drop:
        raise ValueError("cannot merge a row with itself")
    probs = rm.context_probs.probs
    max_abs_diff = float(np.abs(probs[keep] - probs[drop]).max())
    if max_abs_diff > DUPLICATE_ROW_TOL:
        raise RowsNotEqual(keep, drop, max_abs_diff)
    merge_map = np.delete(np.eye(dim), drop, axis=1)
    kept_column = keep if keep < drop else keep - 1
    merge_map[drop, kept_column] = 1.0
    reduced = np.delete(probs, drop, axis=0)
    return merge_map, reduced


# -- serialization -----------------------------------------------------------

def save_matrix(matrix: StochasticMatrix, path) -> None:
    """Text format: first line ``V=<int>``, then V comma-separated rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"V={matrix.dim}\n")
        for row in matrix.probs:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def load_matrix(path) -> StochasticMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("V="):
            raise ValueError(f"expected 'V=<int>' header, got {header!r}")
        dim = int(header[2:])
        rows = [
            [float(x) for x in line.strip().split(",")]
            for line in fh
            if line.strip()
        ]
    if len(rows) != dim:
        raise ValueError(f"expected {dim} rows, found {len(rows)}")
    for index, row in enumerate(rows):
        if len(row) != dim:
            raise ValueError(f"row {index} has {len(row)} entries, expected {dim}")
    return validate_stochastic(np.array(rows))
