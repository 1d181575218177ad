"""Exception types shared across the package."""


class KamlinError(Exception):
    """Base class for all package errors."""


class FractionalPoleError(KamlinError):
    """An r-derivative would produce a negative power of sqrt(r)."""


class ParseError(KamlinError):
    """Malformed Hamiltonian document."""


class ValidationError(KamlinError):
    """Well-formed document that violates a Hamiltonian invariant."""


class ResonantModeError(KamlinError):
    """A (k, m) = (0, 0) mode was handed to the homological solver."""


class SmallDivisorUnderflow(KamlinError):
    """|m - k*omega| fell below the floating-point divisor floor."""

    def __init__(self, index, divisor):
        super().__init__(f"small divisor {divisor:.3e} at mode {tuple(index)}")
        self.index = tuple(index)
        self.divisor = divisor


class QuadratureError(KamlinError):
    """Adaptive quadrature did not reach its tolerance."""


class DegreeViolation(KamlinError):
    """A transformed perturbation did not reach its promised lowest degree."""


class NonLinearizableError(KamlinError):
    """A nonzero twist coefficient blocks linearization.

    Attributes
    ----------
    j : int
        The offending coefficient is A_{2j}, i.e. the coefficient of r**j.
    A : complex
        Its value.
    kernel_mass : float
        Majorant of the whole kernel part found at the obstructing degrees.
    step : int or None
        KAM step at which it was detected, if raised by the iteration.
    """

    def __init__(self, j, A, kernel_mass, step=None, partial=None):
        super().__init__(
            f"nonzero twist coefficient A_{2 * j} = {A.real:.6g}"
            f"{A.imag:+.2g}j (kernel mass {kernel_mass:.3e})"
        )
        self.j = j
        self.A = A
        self.kernel_mass = kernel_mass
        self.step = step
        self.partial = partial


class DomainExhausted(KamlinError):
    """The shrinking analyticity domain reached zero within the schedule."""

    def __init__(self, message, schedule=None):
        super().__init__(message)
        self.schedule = schedule


class NotFound(KamlinError):
    """No admissible start exponent q was found in the scanned range."""
