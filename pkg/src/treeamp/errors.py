"""Exception hierarchy shared across modules."""


class TreeAmpError(Exception):
    """Base class for all package errors."""


class NonPositivePrecision(TreeAmpError):
    """Gaussian-type log-partition queried with precision a <= a_min."""


class EmptyInterval(TreeAmpError):
    """Interval belief with x_min >= x_max."""


class DivergentTilt(TreeAmpError):
    """Tilted prior integral does not converge."""


class NonPositiveTilt(TreeAmpError):
    """Teacher dual tilt non-positive on the spectrum support."""


class NonPositiveEffectivePrecision(TreeAmpError):
    """Linear-channel effective precision a_z + a_x * lambda <= 0."""


class SingularPrecision(TreeAmpError):
    """Full-covariance precision matrix not positive definite."""


class QuadratureFailure(TreeAmpError):
    """Quadrature error estimate above tolerance."""


class DomainError(TreeAmpError):
    """Argument outside a transform's or observation's domain."""


class ShapeMismatch(TreeAmpError):
    """Incompatible dimensions between factors and variables."""


class CycleDetected(TreeAmpError):
    """Factor graph contains a cycle."""


class Disconnected(TreeAmpError):
    """Factor graph is not connected."""


class UnknownFactorKind(TreeAmpError):
    """Declaration references an unknown factor kind."""


class DuplicateVariable(TreeAmpError):
    """Two factors declare the same output variable inconsistently."""


class NegativePosteriorPrecision(TreeAmpError):
    """Variable posterior precision dropped below the variance floor."""

    def __init__(self, msg, edge=None):
        super().__init__(msg)
        self.edge = edge


class NumericalFailure(TreeAmpError):
    """Module failure during an engine sweep, with edge context."""

    def __init__(self, msg, edge=None):
        super().__init__(msg)
        self.edge = edge


class NotConverged(TreeAmpError):
    """Iteration hit max_iter; carries the last state for inspection."""

    def __init__(self, msg, result=None):
        super().__init__(msg)
        self.result = result


class UnsamplableFactor(TreeAmpError):
    """Factor cannot be forward-sampled (MAP penalty, extra prior)."""


class ConfigError(TreeAmpError):
    """Invalid experiment configuration."""
