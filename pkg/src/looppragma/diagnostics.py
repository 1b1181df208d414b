"""Error classes and the ``file:line: level: message`` diagnostic record."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Level(Enum):
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"


@dataclass(frozen=True)
class Location:
    file: str = "<input>"
    line: int | None = None
    column: int | None = None

    def __str__(self) -> str:
        if self.line is None:
            return self.file
        if self.column is None:
            return f"{self.file}:{self.line}"
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    level: Level
    message: str
    location: Location = Location()

    def __str__(self) -> str:
        return f"{self.location}: {self.level.value}: {self.message}"


class LoopPragmaError(Exception):
    """Base class; carries an optional source location."""

    def __init__(self, message: str, location: Location | None = None):
        super().__init__(message)
        self.message = message
        self.location = location or Location()

    def __str__(self) -> str:
        return f"{self.location}: error: {self.message}"


# -- frontend -----------------------------------------------------------------

class ParseError(LoopPragmaError):
    pass


class UnknownTransformation(ParseError):
    pass


class MalformedClause(ParseError):
    pass


class NonCanonicalLoop(ParseError):
    pass


class NonAffineExpression(ParseError):
    pass


# -- names --------------------------------------------------------------------

class NameResolutionError(LoopPragmaError):
    pass


class DuplicateExplicitName(NameResolutionError):
    pass


class UnknownName(NameResolutionError):
    pass


class AmbiguousName(NameResolutionError):
    pass


class BadRange(NameResolutionError):
    pass


# -- transformations ----------------------------------------------------------

class TransformError(LoopPragmaError):
    pass


class PreconditionViolated(TransformError):
    pass


class UnsupportedTransformation(TransformError):
    pass


# -- interpreter --------------------------------------------------------------

class ExecutionError(LoopPragmaError):
    pass


class OutOfBounds(ExecutionError):
    pass


class IntegerOverflow(ExecutionError):
    pass


class NonTermination(ExecutionError):
    pass


class UnboundParameter(ExecutionError):
    pass
