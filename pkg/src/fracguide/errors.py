"""Exception hierarchy shared by all fracguide modules."""

from __future__ import annotations


class FracGuideError(Exception):
    """Base class for every error raised by the package."""


class GridError(FracGuideError, ValueError):
    """Time grid or grid function is malformed or unsuitable for the operation."""


class MittagLefflerRangeError(FracGuideError, ArithmeticError):
    """Argument lies outside the envelope where the series evaluation is trusted."""


class NumericAbort(FracGuideError, ArithmeticError):
    """A right-hand side produced a non-finite value.

    ``node`` is the index of the grid node whose evaluation failed.
    """

    def __init__(self, message: str, node: int) -> None:
        super().__init__(f"{message} (node {node})")
        self.node = node


class UnsupportedCombination(FracGuideError, NotImplementedError):
    """Dynamics structure and action sets admit no exact extremal selector."""


class ScenarioParseError(FracGuideError, ValueError):
    """Scenario file could not be parsed; ``line`` is 1-based or ``None``."""

    def __init__(self, message: str, line: int | None = None) -> None:
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line
