"""Exception hierarchy shared by every module."""


class EcfError(Exception):
    """Base class for all errors raised by ecf_lab."""


class DomainError(EcfError, ValueError):
    pass


class PrecisionExhausted(EcfError):
    """A certified real could not be resolved at the maximum precision."""

    def __init__(self, message, source=None):
        super().__init__(message)
        self.source = source


class InsufficientDigits(EcfError):
    pass


class UnboundedPrefix(EcfError):
    """More leading (1,-1) digits than the configured scan limit."""


class EmptyCylinder(EcfError, ValueError):
    pass


class WindowUnderflow(EcfError):
    pass


class DegenerateDenominator(EcfError, ZeroDivisionError):
    pass
