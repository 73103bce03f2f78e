"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: UsageError -> 1, DataError -> 2,
anything else -> 3.
"""


class VesselRiskError(Exception):
    """Base class for all package errors."""


class UsageError(VesselRiskError):
    """Bad invocation: missing artifacts, invalid configuration values."""


class DataError(VesselRiskError):
    """Input data violates a schema or store invariant."""


class ParseError(DataError):
    """A flat file could not be parsed; message names file, row and column."""


class InvariantError(DataError):
    """A loaded record set violates a store invariant (e.g. interval overlap)."""


class CoverageError(DataError):
    """A vessel lacks membership coverage for a requested window."""
