"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` (bad input, CLI exit 1)
and :class:`EmptyResultError` (nothing to report, CLI exit 2).
"""

from __future__ import annotations


class MocapValError(Exception):
    """Base class for all package errors."""


class ValidationError(MocapValError, ValueError):
    pass


class EmptyResultError(MocapValError, ValueError):
    pass


class _Named:
    """Mixin for errors that carry the offending element's name."""

    def __init__(self, name, message: str | None = None):
        self.name = name
        super().__init__(message or f"{type(self).__name__}: {name!r}")


# skeleton-core
class TopologyError(ValidationError):
    pass


class DuplicateJoint(_Named, TopologyError):
    pass


class DanglingEdge(_Named, TopologyError):
    pass


class MissingAnchor(_Named, TopologyError):
    pass


class CyclicEdges(_Named, TopologyError):
    pass


class MissingSourceJoint(_Named, ValidationError):
    pass


class IncompleteMap(_Named, ValidationError):
    pass


# registration
class DegenerateFrame(ValidationError):
    pass


class CollinearAnchors(ValidationError):
    pass


class NotARotation(ValidationError):
    pass


# kinematics
class DegenerateProjection(ValidationError):
    pass


class UnknownJoint(_Named, ValidationError):
    pass


# stream-sync
class EmptySeries(EmptyResultError):
    pass


class NoOverlap(EmptyResultError):
    pass


class EmptyInput(EmptyResultError):
    pass


class EmptyGroup(_Named, EmptyResultError):
    pass


# euler-anomaly
class TooShort(ValidationError):
    pass


# synth-oracle
class InvalidProfile(ValidationError):
    pass


class UnknownChannel(_Named, ValidationError):
    pass


class InvalidLength(_Named, ValidationError):
    pass


# io
class FormatError(ValidationError):
    """A file-level problem located at a 1-based line number."""

    def __init__(self, line: int | None, reason: str, path=None):
        self.line = line
        self.reason = reason
        self.path = path
        where = f"{path}:" if path else ""
        loc = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{loc}{reason}")


class ParseError(FormatError):
    pass


class TimestampOrder(FormatError):
    pass


class MissingJoint(FormatError):
    pass


class EmptyFile(FormatError):
    pass


class EmptyReport(EmptyResultError):
    pass
