"""Exception hierarchy for the zkl codec."""


class ZklError(Exception):
    """Base class for all zkl errors."""


class FormatError(ZklError):
    """The container header is malformed (bad magic, version, or tables)."""


class CorruptStreamError(ZklError):
    """The entropy payload is truncated or decodes to invalid data."""


class ValidationError(ZklError):
    """A graph violates its structural invariants."""


class UnsupportedOperationError(ZklError):
    """The requested operation is not available for this container mode."""
