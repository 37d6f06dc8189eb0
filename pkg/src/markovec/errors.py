"""Exception hierarchy shared by all markovec modules.

Every error carries the offending values so callers (and the CLI) can print
an actionable message without re-deriving context.
"""

from __future__ import annotations


class MarkovecError(Exception):
    """Base class for all validation and domain errors raised by markovec."""


# -- stochastic-matrix / kernel errors --------------------------------------

class NegativeEntry(MarkovecError):
    def __init__(self, row: int, col: int, value: float):
        self.row, self.col, self.value = row, col, value
        super().__init__(f"negative entry {value!r} at ({row}, {col})")


class RowSumViolation(MarkovecError):
    def __init__(self, row: int, row_sum: float):
        self.row, self.row_sum = row, row_sum
        super().__init__(f"row {row} sums to {row_sum!r}, expected 1")


class BlockOverflow(MarkovecError):
    def __init__(self, num_blocks: int, block_size: int, dim: int):
        self.num_blocks, self.block_size, self.dim = num_blocks, block_size, dim
        super().__init__(
            f"{num_blocks} blocks of {block_size} rows do not fit in dimension {dim}"
        )


class NotIrreducible(MarkovecError):
    def __init__(self):
        super().__init__("support graph of the kernel is not strongly connected")


class NoConvergence(MarkovecError):
    """Power iteration hit the iteration cap (periodic chains can do this).

    The running Cesaro average of the iterates is attached; it converges for
    any irreducible chain and is a usable substitute for the fixed point.
    """

    def __init__(self, iterations: int, average):
        self.iterations = iterations
        self.average = average
        super().__init__(f"no convergence after {iterations} iterations")


class DomainError(MarkovecError):
    def __init__(self, value: float, lo: float, hi: float):
        self.value, self.lo, self.hi = value, lo, hi
        super().__init__(f"value {value!r} outside [{lo}, {hi}]")


class NotSymmetric(MarkovecError):
    def __init__(self, max_asymmetry: float):
        self.max_asymmetry = max_asymmetry
        super().__init__(f"matrix is not symmetric (max |A - A^T| = {max_asymmetry!r})")


class EigenvalueOutOfRange(MarkovecError):
    def __init__(self, eigenvalue: float):
        self.eigenvalue = eigenvalue
        super().__init__(f"eigenvalue {eigenvalue!r} outside [0, 1]")


class RowsNotEqual(MarkovecError):
    def __init__(self, row_a: int, row_b: int, max_abs_diff: float):
        self.row_a, self.row_b, self.max_abs_diff = row_a, row_b, max_abs_diff
        super().__init__(
            f"rows {row_a} and {row_b} differ (max abs diff {max_abs_diff!r})"
        )


# -- corpus / model errors ---------------------------------------------------

class IndexOutOfRange(MarkovecError):
    def __init__(self, index: int, bound: int):
        self.index, self.bound = index, bound
        super().__init__(f"index {index} outside [0, {bound})")


class EmptyCorpus(MarkovecError):
    def __init__(self, detail: str = "corpus yields no training windows"):
        super().__init__(detail)


class DimensionMismatch(MarkovecError):
    def __init__(self, expected, got):
        self.expected, self.got = expected, got
        super().__init__(f"dimension mismatch: expected {expected}, got {got}")


class NonpositiveModelProb(MarkovecError):
    def __init__(self, index: int, value: float):
        self.index, self.value = index, value
        super().__init__(f"model probability {value!r} at index {index} is not > 0")


class EmptyGroup(MarkovecError):
    def __init__(self, detail: str = "group contains no index pairs"):
        super().__init__(detail)


class ZeroVector(MarkovecError):
    def __init__(self, index=None):
        self.index = index
        where = f" at row {index}" if index is not None else ""
        super().__init__(f"zero vector{where} has no direction")


# -- lexicon / slice errors --------------------------------------------------

class ParseError(MarkovecError):
    def __init__(self, line_no: int, line: str):
        self.line_no, self.line = line_no, line
        super().__init__(f"cannot parse line {line_no}: {line!r}")


class EmptyCategory(MarkovecError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"lexicon category {name!r} is missing or empty")


class EmptySlice(MarkovecError):
    def __init__(self, label: str = ""):
        self.label = label
        super().__init__(f"corpus slice {label!r} contains no words")


class NoGroupOverlap(MarkovecError):
    def __init__(self, group):
        self.group = group
        shown = sorted(group)[:5]
        super().__init__(f"no word of group {shown}... is in the vocabulary")


class WordNotInVocab(MarkovecError):
    def __init__(self, word: str):
        self.word = word
        super().__init__(f"word {word!r} is not in the vocabulary")


# -- harness errors ----------------------------------------------------------

class ConstructionFailed(MarkovecError):
    def __init__(self, attempts: int):
        self.attempts = attempts
        super().__init__(f"matrix construction failed after {attempts} attempts")
