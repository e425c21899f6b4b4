"""Exception and warning classes.

Two families: ``InvalidInput`` for bad arguments or data (CLI exit code 2)
and ``NumericalFailure`` for computations that could not deliver a result
(CLI exit code 3).
"""


class ScdError(Exception):
    """Base class for all package errors."""


class InvalidInput(ScdError, ValueError):
    pass


class NumericalFailure(ScdError, ArithmeticError):
    pass


class TooFewPoints(InvalidInput):
    pass


class NonFiniteValue(InvalidInput):
    def __init__(self, index, value=None):
        self.index = index
        super().__init__(f"NonFiniteValue at index {index}: {value!r}")


class DegenerateSample(InvalidInput):
    pass


class InvalidN(InvalidInput):
    pass


class OverrideOutOfGrid(InvalidInput):
    pass


class VarianceUndefined(InvalidInput):
    pass


class ZeroIQR(InvalidInput):
    pass


class InsufficientPoints(InvalidInput):
    pass


class RangeTooNarrow(InvalidInput):
    pass


class NoQualifyingM(NumericalFailure):
    pass


class ImaginaryResidue(NumericalFailure):
    pass


class NoSolution(NumericalFailure):
    pass


class TailNotConverged(NumericalFailure):
    pass


class QuadratureFailure(NumericalFailure):
    pass


class ScdWarning(UserWarning):
    pass


class ConvergenceWarning(ScdWarning):
    """The estimate is computed but is unlikely to be close to the truth."""


class DegenerateSampleWarning(ScdWarning):
    pass


class LatticeWarning(ScdWarning):
    pass


class PilotUnderflow(ScdWarning):
    pass


class BandwidthFallbackWarning(ScdWarning):
    pass
