"""Exception hierarchy.

Everything raised on purpose derives from :class:`BlockfadeError`.  The CLI
maps :class:`UsageError` subclasses to exit code 2 and every other
:class:`BlockfadeError` to exit code 1.
"""


class BlockfadeError(Exception):
    """Base class for all package errors."""


class DomainError(BlockfadeError, ValueError):
    """An input lies outside the domain of an operation."""


class InvalidLaw(DomainError):
    pass


class NoMass(DomainError):
    """Fading law places no mass on strictly positive gains."""


class InvalidAlpha(DomainError):
    pass


class EmptyGrid(DomainError):
    pass


class DivergentInversion(DomainError):
    """E[1/|H|^2] over the non-outage region is infinite."""


class NonConvergent(BlockfadeError, ArithmeticError):
    """Adaptive quadrature or root finding did not reach tolerance."""


class NonFinite(BlockfadeError, ArithmeticError):
    """An integrand produced NaN or infinity on the support."""


class ConstraintBreach(BlockfadeError, AssertionError):
    """The energy-harvesting prefix constraint failed inside the simulator.

    This always indicates a simulator bug.
    """


class UsageError(BlockfadeError):
    """Malformed command line or configuration."""


class ParseError(UsageError):
    pass


class UnknownFigure(UsageError):
    pass
