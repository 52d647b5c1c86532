"""Exception types raised across the package.

Every error is a ``ValueError`` or ``ArithmeticError`` subclass so callers
that only care about "bad input" vs "numerical trouble" can catch broadly.
"""

from __future__ import annotations


class TopologyError(ValueError):
    """A weight matrix or topology file violates a Topology invariant."""

    invariant = "topology"


class NotSquare(TopologyError):
    invariant = "square"

    def __init__(self, shape):
        self.shape = tuple(shape)
        super().__init__(f"weight matrix must be square, got shape {self.shape}")


class TooSmall(TopologyError):
    invariant = "n>=2"

    def __init__(self, n: int):
        self.n = n
        super().__init__(f"need at least 2 agents, got n={n}")


class NonFiniteEntry(TopologyError):
    invariant = "finite"

    def __init__(self, row: int, col: int):
        self.row, self.col = row, col
        super().__init__(f"non-finite weight at ({row}, {col})")


class NegativeEntry(TopologyError):
    invariant = "nonnegative"

    def __init__(self, row: int, col: int, value: float):
        self.row, self.col, self.value = row, col, value
        super().__init__(f"negative weight {value!r} at ({row}, {col})")


class NonzeroDiagonal(TopologyError):
    invariant = "zero-diagonal"

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"diagonal entry of row {row} is not zero")


class RowSumViolation(TopologyError):
    invariant = "row-stochastic"

    def __init__(self, row: int, total: float):
        self.row, self.total = row, total
        super().__init__(f"row {row} sums to {total!r}, expected 1")


class MalformedTopologyFile(TopologyError):
    invariant = "file-format"


class InvalidDegree(ValueError):
    pass


class NotStronglyConnected(ValueError):
    pass


class Aperiodic(ValueError):
    pass


class TooLarge(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class LambdaOutOfRange(ValueError):
    pass


class NonUniformLambda(ValueError):
    pass


class InvalidInitial(ValueError):
    pass


class NoConvergence(ArithmeticError):
    """The dense eigenvalue iteration hit its cap."""


class NotConvergent(ArithmeticError):
    """A rate was requested for an instance not predicted to converge."""


class Singular(ArithmeticError):
    """The linear system has no unique solution."""


class LambdaOne(ValueError):
    """Confidence 1 makes the update the identity; no fixed point system."""


class BoxViolation(ArithmeticError):
    """An opinion left [0, 1] during simulation."""
