"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Raised when inputs violate a documented precondition or invariant."""


class RefusalError(RuntimeError):
    """Raised when a solve is refused because its certified preconditions fail.

    Carries a ``diagnostic`` dict with the quantities that triggered the
    refusal (e.g. minimal admissible horizon, Gramian eigenvalue floor).
    """

    def __init__(self, message: str, diagnostic: dict | None = None):
        super().__init__(message)
        self.diagnostic = dict(diagnostic or {})


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver stops without reaching its tolerance.

    The partial result and the iteration trace are attached so callers can
    inspect stagnation instead of receiving a silent wrong answer.
    """

    def __init__(self, message: str, trace=None, partial=None):
        super().__init__(message)
        self.trace = trace
        self.partial = partial
