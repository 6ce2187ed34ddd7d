"""Exception hierarchy for patchvar."""


class PatchvarError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PatchvarError, ValueError):
    """An argument lies outside the domain of the operation."""


class AdmissibilityError(DomainError):
    """Equicorrelation parameter gives a matrix that is not positive semidefinite."""


class DegenerateDataError(DomainError):
    """Data without dispersion (constant columns, zero variance)."""


class DegenerateTailError(DomainError):
    """No sample point lies strictly above the VaR estimate."""


class IngestionError(PatchvarError):
    """A data or model file could not be parsed.

    The message carries the offending location (line/row/column).
    """


class ConfigurationError(PatchvarError):
    """Invalid simulation configuration (e.g. resource caps exceeded)."""
