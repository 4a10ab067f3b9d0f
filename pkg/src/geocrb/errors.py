"""Exception hierarchy shared by all modules."""


class GeoCRBError(Exception):
    """Base class for library errors."""


class DomainError(GeoCRBError, ValueError):
    """Parameter point (or finite-difference stencil) outside the model domain."""


class DimensionMismatch(GeoCRBError, ValueError):
    pass


class IndexOutOfRange(GeoCRBError, IndexError):
    pass


class NonConvergence(GeoCRBError, ArithmeticError):
    pass


class MissingGenerators(GeoCRBError):
    pass


class IncompatibleSupport(GeoCRBError, ArithmeticError):
    """A matrix has weight outside the range of the QFIM."""


class NumericalInconsistency(GeoCRBError, ArithmeticError):
    """Inputs violate a bound by more than rounding can explain."""


class DegenerateGaps(GeoCRBError, ValueError):
    pass


class StepTooLarge(GeoCRBError, ArithmeticError):
    pass


class FitFailed(GeoCRBError):
    pass


class InconsistentReconstruction(GeoCRBError, ArithmeticError):
    pass
