"""Exception hierarchy shared by all nbnet modules."""


class NBNetError(Exception):
    """Base class for every error raised by nbnet."""


class DomainError(NBNetError, ValueError):
    """An argument lies outside the domain of the operation."""


class PoleError(DomainError):
    """Evaluation requested at (or too close to) a pole."""


class ConstraintViolation(DomainError):
    """Coefficients do not satisfy the orthogonality constraint c . beta = 0."""


class ShapeError(NBNetError, ValueError):
    """Array shapes are inconsistent."""


class ConvergenceError(NBNetError, ArithmeticError):
    """A series or iteration did not reach its target within the term budget."""


class ToleranceError(ConvergenceError):
    """A quadrature ran out of panels before meeting its tolerance."""


class NonFiniteError(NBNetError, ArithmeticError):
    """A computation overflowed or produced NaN."""


class SingularSystemError(NBNetError, ArithmeticError):
    """The KKT system stayed numerically singular after ridge escalation."""
