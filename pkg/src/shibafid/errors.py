"""Exception types shared across the package.

The CLI maps these onto distinct exit codes (see `shibafid.cli`).
"""

from __future__ import annotations


class ShibaFidError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ShibaFidError):
    """Malformed or inconsistent run configuration."""


class ConvergenceError(ShibaFidError):
    """Self-consistency loop exhausted its iteration budget.

    Carries the residual history so callers can inspect how the
    iteration stalled.
    """

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


class DegenerateSpectrumError(ShibaFidError):
    """Ground state is (numerically) degenerate; the requested quantity is ill-defined."""


class GapCollapseError(ShibaFidError):
    """Order parameter collapsed to zero; in-gap diagnostics are unavailable."""


class DensityMatrixError(ShibaFidError):
    """A computed density matrix violates trace, hermiticity, positivity or block structure."""


class TransitionNotFoundError(ShibaFidError):
    """No fidelity drop below threshold anywhere on the sweep grid."""
