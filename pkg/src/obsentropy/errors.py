"""Exception types shared across the package."""


class ObsentropyError(Exception):
    """Base class for all package errors."""


class ShapeError(ObsentropyError, ValueError):
    """Operands have incompatible dimensions."""


class ValidationError(ObsentropyError, ValueError):
    """An input fails a structural invariant (hermiticity, completeness, ...)."""


class CapacityError(ObsentropyError, RuntimeError):
    """A computation exceeds the configured cost or memory budget."""

    def __init__(self, message: str, estimated_cost: float | None = None):
        super().__init__(message)
        self.estimated_cost = estimated_cost


class InferenceError(ObsentropyError, RuntimeError):
    """State inference cannot produce a physical state from the given data."""


class SaturationError(InferenceError):
    """An accumulated POVM group fails to form a projector."""


class InconsistencyError(InferenceError):
    """The inferred state does not reproduce the measured probabilities."""
