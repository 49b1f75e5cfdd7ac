"""Exception hierarchy shared across the package.

Every exception carries the process exit code the CLI maps it to, so
library failures surface with a stable, scriptable status.
"""


class EdacscError(Exception):
    """Base class for all package errors."""

    exit_code = 1
    kind = "error"


class ValidationError(EdacscError):
    """Input data violates a documented invariant."""

    exit_code = 3
    kind = "validation"


class LengthMismatchError(ValidationError):
    """Source and target of a pair differ in character count."""


class CorpusFormatError(ValidationError):
    """A corpus file line cannot be parsed into a record."""


class DelimiterTypoError(ValidationError):
    """A typo overlaps a delimiter and the split policy is ``reject``."""


class ScheduleError(ValidationError):
    """A training-schedule request is incomplete or unknown."""


class ProtocolError(EdacscError):
    """A corrector child process violated the wire protocol."""

    exit_code = 4
    kind = "protocol"


class TransportError(ProtocolError):
    """The corrector process died or closed its pipes mid-conversation."""


class CorrectorTimeoutError(ProtocolError):
    """The corrector did not answer a batch within the deadline."""
