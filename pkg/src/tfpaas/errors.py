"""Exception types with stable machine-readable codes.

Failures that cross a module or process boundary carry a short code (the
``code`` attribute) so CLI output, HTTP error bodies and tests can match on
the code instead of parsing prose. ``str(err)`` always starts with the code.
"""

from __future__ import annotations

from collections.abc import Sequence


class TfpError(Exception):
    """Base class for every error raised by this package."""

    code: str = "E_TFP"

    def __str__(self) -> str:
        detail = super().__str__()
        return f"{self.code}: {detail}" if detail else self.code


class MalformedXmlError(TfpError):
    """Input is not well-formed XML."""

    code = "E_MALFORMED_XML"


class SchemaError(TfpError):
    """A required element is missing or duplicated; names each offender."""

    code = "E_SCHEMA"

    def __init__(self, message: str, offenders: Sequence[str] = ()) -> None:
        super().__init__(message)
        self.offenders = tuple(offenders)


class FieldError(TfpError):
    """A value is present but violates its constraints; names the field."""

    code = "E_FIELD"

    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message


class InvalidEnvelopeError(TfpError):
    """A submission envelope violates one of its invariants."""

    code = "E_INVALID_ENVELOPE"


class EmptyUsernameError(TfpError):
    code = "E_EMPTY_USERNAME"


class NoSamplesError(TfpError):
    """Every request errored; there is no latency sample to summarize."""

    code = "E_NO_SAMPLES"


class InvalidScriptError(TfpError):
    """A test script failed validation; carries the diagnostic list."""

    code = "E_INVALID_SCRIPT"

    def __init__(self, message: str, diagnostics: Sequence = ()) -> None:
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class BadConfigError(TfpError):
    code = "E_BAD_CONFIG"


class EscapesRootError(TfpError):
    """A configured path override resolves outside the project root."""

    code = "E_ESCAPES_ROOT"


class EmptyStemError(TfpError):
    code = "E_EMPTY_STEM"


class AlreadyScaffoldedError(TfpError):
    code = "E_ALREADY_SCAFFOLDED"


class ExistsError(TfpError):
    """Refusing to overwrite an existing file."""

    code = "E_EXISTS"


class IoError(TfpError):
    code = "E_IO"


class NoTestCaseError(TfpError):
    code = "E_NO_TEST_CASE"


class NoMasterError(TfpError):
    code = "E_NO_MASTER"


class TransportError(TfpError):
    """HTTP transport failed or the peer replied outside the contract."""

    code = "E_TRANSPORT"


class PollTimeoutError(TfpError):
    code = "E_POLL_TIMEOUT"


class UnknownTaskError(TfpError):
    code = "E_UNKNOWN_TASK"


class ConflictError(TfpError):
    """Illegal status transition on a stored result record."""

    code = "E_CONFLICT"


class TargetUnresolvableError(TfpError):
    """Every request failed at transport level; the target is unreachable."""

    code = "E_TARGET_UNRESOLVABLE"


class ZeroVarianceError(TfpError):
    code = "E_ZERO_VARIANCE"


class DomainError(TfpError):
    code = "E_DOMAIN"


class BadWeightsError(TfpError):
    code = "E_BAD_WEIGHTS"


class PortInUseError(TfpError):
    code = "E_PORT_IN_USE"
