"""Exception and warning types shared across the package."""


class TruncationError(ValueError):
    """The requested truncation discards more probability than allowed."""

    def __init__(self, message: str, tail_mass: float):
        super().__init__(f"{message} (tail mass {tail_mass:.3e})")
        self.tail_mass = tail_mass


class ZeroProbabilityError(ValueError):
    """A heralding event has probability zero, so no conditional state exists."""


class NonConvergenceError(RuntimeError):
    """A root find or optimization did not converge."""


class DegenerateError(ValueError):
    """The input carries no information for the requested quantity (flat objective, empty support)."""


class UnsupportedOrderError(ValueError):
    """The analytic Q-function route is only tabulated up to a fixed subtraction order."""


class AccuracyWarning(UserWarning):
    """A phase-space point lies where the truncated state may be inaccurate."""
