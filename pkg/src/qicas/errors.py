"""Exception hierarchy. Every domain failure derives from ``QicasError``."""


class QicasError(Exception):
    """Base class for all domain errors raised by this package."""


class FcidumpFormatError(QicasError, ValueError):
    pass


class FcidumpRangeError(QicasError, IndexError):
    pass


class FcidumpConsistencyError(QicasError, ValueError):
    pass


class ShapeError(QicasError, ValueError):
    pass


class CapacityError(QicasError, MemoryError):
    pass


class ConvergenceError(QicasError, RuntimeError):
    """Iterative eigensolver gave up; ``residual`` holds the best norm seen."""

    def __init__(self, message, residual=float("nan"), energy=float("nan")):
        super().__init__(message)
        self.residual = residual
        self.energy = energy


class PartitionError(QicasError, ValueError):
    pass


class PositivityError(QicasError, ValueError):
    pass


class ClassificationError(QicasError, ValueError):
    """Occupancy-based closed/virtual split disagrees with the CAS size."""

    def __init__(self, message, occupancies=None):
        super().__init__(message)
        self.occupancies = occupancies


class DegenerateProfileError(QicasError, ValueError):
    pass


class NoPlateauError(QicasError, ValueError):
    pass


class DegeneratePartitionError(QicasError, ValueError):
    pass
