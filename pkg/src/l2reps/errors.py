"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """Non-finite or otherwise malformed numerical input."""


class ShapeError(ValueError):
    """Matrix shapes do not chain."""


class NotPSDError(ValueError):
    """A matrix expected to be positive semi-definite has a negative eigenvalue."""


class ConstraintError(ValueError):
    """A hidden representation or covariance chain leaves its feasible set."""

    def __init__(self, layer, violation, message=None):
        self.layer = layer
        self.violation = violation
        if message is None:
            message = f"constraint violated at layer {layer} (relative residual {violation:.3e})"
        super().__init__(message)


class DivergenceError(RuntimeError):
    """Optimization blew up."""

    def __init__(self, step, loss):
        self.step = step
        self.loss = loss
        super().__init__(f"diverged at step {step} (loss {loss:.3e})")


class PreconditionError(ValueError):
    """Arguments violate an operation's precondition."""
