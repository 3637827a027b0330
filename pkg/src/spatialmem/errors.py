"""Error taxonomy shared across the engine.

Every error carries a stable ``code`` string so the HTTP layer and the CLI
can report failures without matching on exception class names.
"""

from __future__ import annotations


class SpatialMemError(Exception):
    """Base class for all engine errors."""

    code = "internal"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


class InvalidArgumentError(SpatialMemError):
    """A caller-supplied value is out of range or malformed."""

    code = "invalid_argument"


class MissingContextError(SpatialMemError):
    """A capture lacks the context a flow needs (e.g. no scene for a Silent Ask)."""

    code = "missing_context"


class NotFoundError(SpatialMemError):
    """Lookup by id found nothing."""

    code = "not_found"


class ConflictError(SpatialMemError):
    """An id is already taken."""

    code = "conflict"


class GateError(SpatialMemError):
    """A write was attempted without verification or sufficient confidence."""

    code = "gate_rejected"


class PersistenceError(SpatialMemError):
    """The backing file could not be read or written."""

    code = "persistence"


class CorruptRecordError(PersistenceError):
    """A line in the middle of a log file failed to parse."""

    code = "corrupt_record"

    def __init__(self, message: str, line_no: int):
        super().__init__(message)
        self.line_no = line_no


class ProviderTransportError(SpatialMemError):
    """A live provider call failed at the transport level."""

    code = "provider_transport"


class MalformedOutputError(SpatialMemError):
    """A provider returned output the caller could not parse."""

    code = "malformed_output"


class UnsupportedInputError(SpatialMemError):
    """A stub provider has no canned answer for this input."""

    code = "unsupported_input"


class RevisionUnavailableError(SpatialMemError):
    """Intent revision could not rewrite the prior query."""

    code = "revision_unavailable"


class WrongEndpointError(SpatialMemError):
    """The transcript's intent does not match the endpoint it was sent to."""

    code = "wrong_endpoint"


class UnanswerableError(SpatialMemError):
    """No memory matched and general knowledge is unavailable."""

    code = "unanswerable"

    def __init__(self, message: str, rationale: str = ""):
        super().__init__(message)
        self.rationale = rationale
