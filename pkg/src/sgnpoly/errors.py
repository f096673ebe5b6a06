"""Exception hierarchy.

Everything raised on bad data derives from :class:`SgnPolyError` so that the
CLI can map it to a single exit code.
"""


class SgnPolyError(Exception):
    """Base class for data / domain errors."""


class InvalidParams(SgnPolyError, ValueError):
    pass


class OverflowProbability(SgnPolyError, ValueError):
    """Some off-diagonal edge probability is >= 1."""


class InvalidProbability(SgnPolyError, ValueError):
    pass


class ParseError(SgnPolyError, ValueError):
    pass


class DegenerateGraph(SgnPolyError, ValueError):
    """The graph has no edges (V = 0)."""


class NonpositiveNuisance(SgnPolyError, ValueError):
    """||eta_hat||^2 - 1 <= 0, the normalisation is undefined."""


class UnsupportedOrder(SgnPolyError, ValueError):
    pass


class TooLarge(SgnPolyError, ValueError):
    pass


class DomainError(SgnPolyError, ValueError):
    pass


class ZeroMatrix(SgnPolyError, ValueError):
    pass


class EigenFailure(SgnPolyError, RuntimeError):
    pass


class NullModel(SgnPolyError, ValueError):
    """A K >= 2 quantity was requested from a K = 1 model."""


class NonConvergence(SgnPolyError, RuntimeError):
    pass


class ConditionViolated(SgnPolyError, ValueError):
    pass


class Infeasible(SgnPolyError, ValueError):
    pass


class NumericalOverflow(SgnPolyError, ArithmeticError):
    pass


class UnknownPreset(SgnPolyError, KeyError):
    pass
