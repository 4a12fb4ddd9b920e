"""Exception hierarchy shared by every layer of the engine.

Each subclass carries a stable machine-readable ``code`` so the HTTP layer
can map internal failures onto response codes without leaking internals.
"""


class DelibError(Exception):
    """Base class for all engine errors."""

    code = "Invalid"


class NotFound(DelibError):
    code = "NotFound"


class Forbidden(DelibError):
    code = "Forbidden"


class Conflict(DelibError):
    code = "Conflict"


class Invalid(DelibError):
    code = "Invalid"


class GridViolation(Invalid):
    """Understanding value is not one of the configured grid levels."""


class TriangleViolation(DelibError):
    """Agreement value falls outside the span permitted by understanding."""

    code = "TriangleViolation"


class PhaseError(DelibError):
    """Operation called in the wrong deliberation phase."""

    code = "PhaseError"


class Blocked(DelibError):
    """Contribution refused by the incentive gate; carries the deficit."""

    code = "Blocked"

    def __init__(self, message: str, deficit: int = 0):
        super().__init__(message)
        self.deficit = deficit


class SelfEdge(Invalid):
    """Pairwise weight requested for a proposal against itself."""


class CorruptLog(DelibError):
    """Event log is malformed, truncated, or out of sequence."""

    code = "CorruptLog"


class VersionError(DelibError):
    """Snapshot or record written under an incompatible schema version."""

    code = "VersionError"
