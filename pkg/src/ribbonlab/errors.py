"""Shared exception types.

Every module raises from this small set so the CLI and service can map
failures onto stable exit codes / error messages.
"""


class RibbonLabError(Exception):
    """Base class for all library errors."""


class ContractError(RibbonLabError):
    """A caller violated a documented precondition or data contract."""


class InvalidPoseError(ContractError):
    """A pose carries a non-unit orientation (beyond 1e-9 tolerance)."""


class DegenerateMotionError(RibbonLabError):
    """Two consecutive tip positions coincide; no motion direction exists."""


class ZeroCrossError(RibbonLabError):
    """Controller normal is parallel to the motion; the ruling cross product vanishes."""


class DomainError(ContractError):
    """A (u, v) parameter pair lies outside the surface domain."""


class SingularityError(RibbonLabError):
    """Surface evaluation requested at a singular parameterization point."""


class ProtocolError(RibbonLabError):
    """A session event or wire message is invalid in the current state."""


class StrokeNotFoundError(ProtocolError):
    """An erase referenced a stroke id that is not live."""


class ParseError(RibbonLabError):
    """A persisted file failed to parse.

    Carries the 1-based line number when the format is line-delimited.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
