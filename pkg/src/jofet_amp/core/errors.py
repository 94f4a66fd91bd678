"""Exception hierarchy shared by the analyzers, simulation and CLI."""

from typing import Any, Dict, List, Optional


class JofetError(Exception):
    """Base class for every error raised by the toolkit.

    Each subclass carries a machine-readable category and the exit code the
    command-line surface reports for it.
    """

    category: str = "internal"
    exit_code: int = 4

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def to_dict(self) -> Dict[str, Any]:
        """Serialize the error for an error ResultRecord."""
        return {"category": self.category, "message": self.message}


class DomainError(JofetError, ValueError):
    """A precondition on an input value is violated."""

    category = "validation"
    exit_code = 3


class ParseError(JofetError):
    """A data file cannot be read."""

    category = "parse"
    exit_code = 3

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[str] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column {column}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(JofetError):
    """A mandatory column, config key or command-line flag is missing."""

    category = "schema"
    exit_code = 3

    def __init__(self, message: str, name: Optional[str] = None, usage: bool = False):
        super().__init__(message)
        self.name = name
        if usage:
            self.exit_code = 2


class NumericalError(JofetError):
    """Base class for failures of a numerical procedure."""

    category = "numerical"
    exit_code = 4


class FitRejectedError(NumericalError):
    """The data holds no feature the fit could lock onto."""


class LowContrastError(NumericalError):
    """A peak or tone cannot be separated from its floor."""


class UnidentifiableError(NumericalError):
    """The data do not constrain the requested parameters."""


class InconsistentGainError(NumericalError):
    """A gain value lies outside the region allowed by the sum rule."""


class StabilityError(NumericalError):
    """A linearized response was requested on an unstable steady state."""


class AmbiguityError(NumericalError):
    """Several candidate answers fit equally well."""

    def __init__(self, message: str, candidates: List[float]):
        super().__init__(message)
        self.candidates = list(candidates)

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["candidates"] = self.candidates
        return data


class ConvergenceError(NumericalError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message: str, best_params: Optional[Dict[str, float]] = None):
        super().__init__(message)
        self.best_params = dict(best_params or {})

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["best_params"] = self.best_params
        return data


class PlotSpecError(JofetError):
    """A plot specification references data that does not exist."""

    category = "spec"
    exit_code = 3
