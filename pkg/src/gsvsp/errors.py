"""Exception hierarchy shared across the package."""


class GsvspError(Exception):
    """Base class for all package errors."""


class InvalidInputError(GsvspError, ValueError):
    pass


class NoSolutionError(GsvspError):
    pass


class ConvergenceError(GsvspError):
    pass


class SynthesisError(GsvspError):
    pass


class CertificationError(GsvspError):
    def __init__(self, message, first_failing_time=None):
        super().__init__(message)
        self.first_failing_time = first_failing_time


class SimulationError(GsvspError):
    def __init__(self, message, first_bad_time=None):
        super().__init__(message)
        self.first_bad_time = first_bad_time


class NumericError(GsvspError):
    pass
