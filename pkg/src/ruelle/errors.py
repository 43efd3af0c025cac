"""Exception hierarchy shared by every module."""


class RuelleError(Exception):
    """Base class for all errors raised by this package."""


class NotAperiodic(RuelleError):
    def __init__(self, message, zero_row=None, zero_col=None):
        super().__init__(message)
        self.zero_row = zero_row
        self.zero_col = zero_col


class DepthTooLarge(RuelleError):
    """An enumeration would exceed the configured word cap."""


class InadmissibleJunction(RuelleError):
    """A prefix and a periodic tail do not glue into an admissible sequence."""


class NoAnalyticBound(RuelleError):
    pass


class NotInSpace(RuelleError):
    """The function has a variation that the weight profile forbids."""


class ProfileViolation(RuelleError):
    pass


class HypothesisViolated(RuelleError):
    """An estimate was invoked outside the range where its hypotheses hold."""


class EigensolveFailure(RuelleError):
    pass


class RTooSmall(RuelleError):
    pass


class ConfigError(RuelleError):
    """Invalid or unreadable run configuration (CLI exit code 2)."""
