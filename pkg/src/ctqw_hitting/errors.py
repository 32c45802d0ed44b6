"""Exception types raised by the package."""

from __future__ import annotations


class GraphParseError(ValueError):
    """Malformed edge-list input. ``line`` is 1-based, or None when not tied to a line."""

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ContractViolation(ValueError):
    """An input does not satisfy an operation's precondition."""


class NumericalContractError(ArithmeticError):
    """A computed result breaks a numerical postcondition (e.g. a non-real hitting time)."""
