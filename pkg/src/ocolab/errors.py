"""Exception types shared across the package."""


class OcoError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(OcoError, ValueError):
    pass


class NoConvergence(OcoError, RuntimeError):
    """Iterative routine stopped before meeting its tolerance.

    ``best`` carries the best iterate found so far, if any.
    """

    def __init__(self, message, best=None, iterations=None):
        super().__init__(message)
        self.best = best
        self.iterations = iterations


class DegenerateDenominator(OcoError, ArithmeticError):
    pass


class NotPSD(OcoError, ValueError):
    pass


class UnsupportedSet(OcoError, NotImplementedError):
    pass


class UnsupportedCombination(OcoError, NotImplementedError):
    pass


class CenterNotInterior(OcoError, ValueError):
    pass


class DomainViolation(OcoError, ValueError):
    pass


class BoundaryViolation(DomainViolation):
    pass


class StepRuleRequiresMetadata(OcoError, ValueError):
    pass


class MetadataMissing(OcoError, ValueError):
    pass


class EmptyTrainingSet(OcoError, ValueError):
    pass


class EpsilonOutOfRange(OcoError, ValueError):
    pass


class NegativeLoss(OcoError, ValueError):
    pass


class SingularA(OcoError, ArithmeticError):
    pass


class InfeasiblePlay(OcoError, RuntimeError):
    pass


class EtaTooLarge(OcoError, ValueError):
    pass


class NewtonNoConvergence(NoConvergence):
    pass


class NonpositiveReturn(OcoError, ValueError):
    pass


class ConfigInvalid(OcoError, ValueError):
    """Bad experiment configuration; ``field`` names the offending key."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
