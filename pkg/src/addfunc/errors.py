"""Exception types shared across the package."""


class PreconditionError(ValueError):
    """An input violates a documented inequality; the message names it."""


class NumericalError(RuntimeError):
    """A numerical routine failed (non-convergence, NaN, LP failure)."""


class HermiteOverflowError(OverflowError):
    """Hermite evaluation left the representable float range."""

    def __init__(self, degree, x):
        self.degree = degree
        self.x = x
        super().__init__(f"H_{degree}({x!r}) exceeds the float64 range")
