"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    pass


class DegeneratePartitionError(ValueError):
    """Support set is empty or covers every column, so one Gram block is empty."""


class MissingGroundTruthError(ValueError):
    pass


class SingularBlockError(ValueError):
    """The signal block C11 of the Gram matrix is (numerically) singular."""


class RegimeViolationError(ValueError):
    """Rate parameters fall outside the regime where a bound is defined."""


class UnsupportedSparsityError(ValueError):
    pass


class InsufficientSampleError(RuntimeError):
    pass


class ConvergenceError(RuntimeError):
    """Coordinate descent hit its sweep budget before certifying optimality.

    The last iterate and its KKT residual are attached so callers can decide
    whether the partial answer is usable.
    """

    def __init__(self, message, beta=None, kkt_residual=None, lam=None):
        super().__init__(message)
        self.beta = beta
        self.kkt_residual = kkt_residual
        self.lam = lam
