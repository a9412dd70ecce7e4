"""Exception types raised across the package."""


class UMBLTError(Exception):
    """Base class for all package errors."""


class DomainMismatchError(UMBLTError):
    pass


class UndefinedMetricError(UMBLTError):
    pass


class SingularKernelError(UMBLTError):
    pass


class PositivityError(UMBLTError):
    """A weight that must be strictly positive is not."""


class DivergenceError(UMBLTError):
    """An iterative solve failed to reach its tolerance.

    ``residual`` holds the last measured update (or correction) size and
    ``result`` the partial result, when one is available.
    """

    def __init__(self, message, residual=float("nan"), result=None):
        super().__init__(message)
        self.residual = residual
        self.result = result


class ConfigError(UMBLTError):
    pass


class WellPosednessWarning(UserWarning):
    """Neither sufficient condition for a unique transport solution holds."""


class RankDeficiencyWarning(UserWarning):
    pass
