"""Exception types.  The CLI maps them onto exit codes."""


class HelmsingError(Exception):
    exit_code = 1


class DomainError(HelmsingError, ValueError):
    """Argument outside the domain of a function."""

    exit_code = 2


class ValidationError(HelmsingError, ValueError):
    """One or more hypotheses violated; ``violations`` lists all of them."""

    exit_code = 2

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class DivergenceError(ValidationError):
    """Kernel envelope too slowly decaying for the convolution to exist."""


class InconsistentProfileError(ValidationError):
    """Sampled profile violates its own declared envelope."""


class UnsupportedError(ValidationError):
    """Requested combination is outside what is implemented."""


class ConvergenceError(HelmsingError):
    exit_code = 3


class BallExitError(ConvergenceError):
    """An iterate left the weighted ball; carries the iteration index."""

    def __init__(self, iteration, margin):
        self.iteration = iteration
        self.margin = margin
        super().__init__(f"iterate {iteration} left the ball (margin {margin:.3e})")


class FitError(HelmsingError, ValueError):
    exit_code = 3
