"""Exception types shared across the package."""


class EvorestError(Exception):
    """Base class for all tool errors."""


class SchemaParseError(EvorestError):
    """The API document is not valid JSON; carries the byte offset."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(message)
        self.offset = offset


class SchemaError(EvorestError):
    """The API document is structurally unusable."""


class ConfigError(EvorestError):
    """A parameter or option combination the tool cannot honor."""


class ContractViolation(EvorestError):
    """A caller broke an internal precondition."""


class ProtocolError(EvorestError):
    """The driver sent a malformed or contradictory payload."""


class ResetFailedError(ProtocolError):
    """The driver could not reset SUT state; the evaluation is skipped."""


class DriverUnreachableError(EvorestError):
    """No driver process is listening at the configured URL."""


class SutUnreachableError(EvorestError):
    """The SUT refused a connection mid-run (not a per-call timeout)."""
