"""Shared exception types."""

from __future__ import annotations


class PolyrecastError(Exception):
    """Base class for all toolkit errors."""


class ParseError(PolyrecastError):
    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} (at position {pos})")


class NotPolynomial(PolyrecastError):
    pass


class DomainViolation(PolyrecastError):
    pass


class NotUnivariate(PolyrecastError):
    pass


class StrategyInapplicable(PolyrecastError):
    pass


class UncomparableResidual(PolyrecastError):
    pass


class DomainExit(PolyrecastError):
    def __init__(self, message: str, time: float | None = None):
        self.time = time
        super().__init__(message)


class NonFiniteState(PolyrecastError):
    pass


class JumpLimitExceeded(PolyrecastError):
    pass


class EmptySampleRegion(PolyrecastError):
    pass


class UnsupportedConstruct(PolyrecastError):
    pass


class ValidationError(PolyrecastError):
    pass
