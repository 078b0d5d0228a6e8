"""Exception and warning types shared across the package."""


class ToleranceError(RuntimeError):
    """A quadrature could not certify the requested accuracy.

    Carries the achieved error estimate so callers can decide whether the
    best-effort result would have been usable.
    """

    def __init__(self, message: str, achieved: float, requested: float):
        super().__init__(f"{message} (achieved {achieved:.3e}, requested {requested:.3e})")
        self.achieved = achieved
        self.requested = requested


class ValidityError(ValueError):
    """Parameters violate a positive-definiteness condition."""


class FactorizationError(RuntimeError):
    """Cholesky factorization failed for every jitter level tried."""

    def __init__(self, message: str, jitter_tried: tuple, condition_estimate: float):
        super().__init__(
            f"{message} (jitter ladder {list(jitter_tried)}, "
            f"condition estimate {condition_estimate:.3e})"
        )
        self.jitter_tried = tuple(jitter_tried)
        self.condition_estimate = condition_estimate


class UnderflowWarning(RuntimeWarning):
    """A special-function value underflowed to zero and was returned as 0.0."""
