"""Exception types raised across the package."""


class InvalidParameterError(ValueError):
    """A parameter lies outside its admissible range."""


class DivergentIntegralError(ValueError):
    """An improper radial integral does not converge."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature exhausted its panel budget without converging."""

    def __init__(self, message, estimate=None, error=None, where=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.where = where


class GradingAuditError(RuntimeError):
    """A mesh failed the grading audit."""

    def __init__(self, message, audit=None):
        super().__init__(message)
        self.audit = audit


class DeskScaleError(RuntimeError):
    """A dense problem exceeds the configured desk-scale node cap."""


class ConvergenceError(RuntimeError):
    """An iterative solver did not reach its tolerance."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class NonMonotoneError(RuntimeError):
    """An iteration that must be monotone decreased."""


class CertificationError(RuntimeError):
    """An exact solution failed its self-certification."""
