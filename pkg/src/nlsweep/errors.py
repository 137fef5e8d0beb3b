"""Exception hierarchy shared by all modules."""


class NlsweepError(Exception):
    """Base class; ``kind`` is the machine-readable tag used by the CLI."""

    kind = "error"


class ValidationError(NlsweepError, ValueError):
    kind = "validation"


class UnknownFamilyError(ValidationError):
    kind = "unknown-family"


class UnsupportedError(NlsweepError):
    kind = "unsupported"


class SingularityError(NlsweepError, ArithmeticError):
    kind = "singularity"


class DomainError(NlsweepError, ValueError):
    kind = "domain"


class IntegrationError(NlsweepError, RuntimeError):
    """Step-size underflow or step budget exhausted; ``location`` is the time reached."""

    kind = "integration-failure"

    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class WindowError(NlsweepError, RuntimeError):
    kind = "non-asymptotic-profile"


class SearchError(NlsweepError, RuntimeError):
    kind = "search-failure"


class ContourError(NlsweepError, RuntimeError):
    kind = "contour"


class MultiplicityError(UnsupportedError):
    kind = "unsupported-configuration"


class CoverageError(NlsweepError, RuntimeError):
    kind = "coverage"
