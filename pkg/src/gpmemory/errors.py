"""Exception hierarchy shared by every module."""


class GPError(Exception):
    """Base class for library errors."""


class DomainError(GPError, ValueError):
    pass


class RangeError(GPError, ValueError):
    pass


class UnsupportedKernelError(GPError, TypeError):
    pass


class PoleError(GPError, ZeroDivisionError):
    def __init__(self, pole, message=None):
        self.pole = pole
        super().__init__(message or f"evaluation at pole {pole!r}")


class NoTargetError(GPError):
    """Raised when K-hat has no nonzero zero to track."""


class ResolutionError(GPError, ValueError):
    def __init__(self, message, mode=None):
        self.mode = mode
        super().__init__(message)


class DegenerateSpectrumError(GPError):
    pass


class ConvergenceError(GPError, ArithmeticError):
    def __init__(self, message, residuals=None):
        self.residuals = residuals
        super().__init__(message)
