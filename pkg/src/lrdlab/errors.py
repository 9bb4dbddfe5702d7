"""Exception hierarchy shared by every module of the lab."""

from __future__ import annotations


class LabError(Exception):
    """Base class for all errors raised by :mod:`lrdlab`."""


class InputDomainError(LabError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ModelError(LabError, ValueError):
    """A model (innovations, process) was constructed with inconsistent parameters."""


class ConfigurationError(LabError, ValueError):
    """An experiment or simulation configuration is invalid."""


class NumericError(LabError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance."""


class ConvergenceError(NumericError):
    """An iteration hit its cap; ``residual`` carries the last defect."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class ClassificationError(LabError):
    """A structural assumption needed for classification does not hold."""


class EstimationError(NumericError):
    """A Monte Carlo estimate did not show the expected convergence pattern."""


class FormatError(LabError, ValueError):
    """A serialized artifact has the wrong schema or version."""


class DivergenceError(NumericError):
    """A series that should converge shows non-decreasing dyadic blocks."""
