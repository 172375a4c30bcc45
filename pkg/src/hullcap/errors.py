"""Error types shared across the package."""


class PreconditionError(ValueError):
    """A documented operation precondition was violated."""


class NumericalFailure(RuntimeError):
    """Numerical quality gate failed (truncation, conditioning, acceptance)."""
