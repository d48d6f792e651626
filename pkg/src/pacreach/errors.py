"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class SimulationDiverged(RuntimeError):
    """The integrated state became non-finite."""

    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"simulation diverged at t={self.time:.6g}")


class DegenerateDataError(ValueError):
    """Sample batch does not span the full state space."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap."""

    def __init__(self, message, gap=None):
        self.gap = gap
        super().__init__(message)


class EmptySetError(ValueError):
    """A requested sublevel set would be empty."""


class InsufficientCalibrationError(ValueError):
    """Calibration set too small for the requested error rate."""


class InfeasibleError(RuntimeError):
    """No admissible solution below the search cap."""

    def __init__(self, message, last=None):
        self.last = last
        super().__init__(message)
