from __future__ import annotations
from typing import Any


class NullFrenetError(Exception):
    """The base class for all of nullfrenet's errors."""


class ConfigError(NullFrenetError):
    """An error indicating a malformed run configuration or input document."""


class DimensionError(NullFrenetError):
    """
    An error indicating mixed 2+1 and 3+1 objects, an operation called in the
    wrong mode, or components that are not finite real numbers.
    """


class DerivativeOrderError(NullFrenetError):
    """An error indicating that a source cannot supply enough derivatives."""


class DegenerateCurveError(NullFrenetError):
    """
    An error indicating a point where the curve has no null Frenet-Serret
    frame, i.e., Ẍ·Ẍ ≥ 0 or the radicand of the second curvature is negative.
    """

    def __init__(
        self, message: str, *, lam: None | float = None, sigma: None | float = None
    ) -> None:
        super().__init__(message)
        self.lam = lam
        self.sigma = sigma


class FrameExtractionError(NullFrenetError):
    """An error indicating an extracted frame that violates the Gram relations."""

    def __init__(self, message: str, *, sigma: None | float = None) -> None:
        super().__init__(message)
        self.sigma = sigma


class RestorationError(NullFrenetError):
    """An error indicating a frame too far gone to be projected back."""


class BlowUpError(NullFrenetError):
    """
    An error indicating a non-finite integrator state. The partial result up to
    the last good step travels with the error so that callers can still write it.
    """

    def __init__(self, message: str, *, sigma: float, partial: Any = None) -> None:
        super().__init__(message)
        self.sigma = sigma
        self.partial = partial


class BoundaryTermError(NullFrenetError):
    """
    An error indicating a deformation that does not vanish to sufficient order
    at the endpoints, so that the first variation picks up unknown boundary terms.
    """


class ModelError(NullFrenetError):
    """An error indicating invalid couplings for a model, e.g., β = 0."""
