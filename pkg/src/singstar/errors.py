"""Exception hierarchy.

Validation problems derive from :class:`ConfigError` (CLI exit code 1),
numerical failures from :class:`NumericalError` (CLI exit code 2).
"""


class SingstarError(Exception):
    pass


class ConfigError(SingstarError, ValueError):
    pass


class NumericalError(SingstarError, ArithmeticError):
    pass


# graph model
class EmptyGraph(ConfigError):
    pass


class UnsortedOrders(ConfigError):
    pass


class ZeroGammaDiagonal(ConfigError):
    pass


class JetAtWrongPoint(ConfigError):
    pass


# frobenius
class ResonantExponents(ConfigError):
    pass


class EqualRealParts(ConfigError):
    pass


class IntegerCollision(ConfigError):
    pass


class SectorBoundary(ConfigError):
    pass


class LogarithmicCase(ConfigError):
    """Resonant Frobenius index with nonzero forcing: a log term would be needed."""


# numerics
class DegenerateLeadingCoefficient(NumericalError):
    pass


class NonConvergence(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class MagnitudeOverflow(NumericalError):
    pass


class StepUnderflow(NumericalError):
    pass


class SeriesTruncation(NumericalError):
    pass


class CutPointTooLarge(NumericalError):
    pass


# forward / inverse
class NearEigenvalue(NumericalError):
    def __init__(self, msg, *, s=None, k=None, lam=None):
        super().__init__(msg)
        self.s = s
        self.k = k
        self.lam = lam


class BoundaryZero(NumericalError):
    pass


class CountOverflow(NumericalError):
    pass


class MatrixEvaluatorFailure(NumericalError):
    pass


class SingularSigma(NumericalError):
    pass


class VanishingDenominator(NumericalError):
    pass
