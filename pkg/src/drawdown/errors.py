"""Exception types shared across the library."""


class DrawdownError(Exception):
    """Base class for all library errors."""


class ConfigError(DrawdownError):
    """Malformed or inconsistent configuration input."""


class ThresholdBeyondSupport(DrawdownError):
    """Excess threshold lies at or beyond the severity support."""


class ExponentBeyondRadius(DrawdownError):
    """Exponential moment requested at or beyond the finiteness radius."""


class InvalidScale(DrawdownError):
    """Scale index must be >= 1."""


class BranchMisuse(DrawdownError):
    """Transcendental-kernel root requested on the full-retention branch."""


class NetProfitViolated(DrawdownError):
    """Retention fails the net-profit condition."""


class DriftNonpositive(DrawdownError):
    """Simulated inter-jump drift is not positive."""


class StateOutsideDomain(DrawdownError):
    """Surplus state violates x <= m."""


class ScaleTooSmall(DrawdownError):
    """Bound evaluated below the scale threshold where it is certified."""


class SolverNoBracket(DrawdownError):
    """Root solver could not bracket a sign change."""


class TailConditionFailed(DrawdownError):
    """Excess-variable exponential moment is not certifiably finite."""


class MaxIterations(DrawdownError):
    """Iteration cap reached before convergence."""


class InvalidStudy(DrawdownError):
    """Convergence-study specification is unusable."""
