"""Semantic exception hierarchy.

Public functions raise these instead of bare ValueError so callers can
distinguish contract violations (UsageError, DomainError) from genuine
numerical failures (IntegrationError, NotDominated).
"""


class SigeoError(Exception):
    """Base class for all package errors."""


class UsageError(SigeoError, ValueError):
    """Inputs violate an interface contract (mismatched spaces, bad shapes)."""


class DomainError(SigeoError, ValueError):
    """A parameter point lies outside the model's parameter domain."""


class NotDominated(SigeoError):
    """A measure carries mass where its reference measure vanishes."""

    def __init__(self, message, nodes=None):
        super().__init__(message)
        self.nodes = list(nodes) if nodes is not None else []


class IntegrationError(SigeoError, ArithmeticError):
    """Quadrature produced non-finite mass beyond tolerance."""


class SparseCloudError(SigeoError):
    """Point cloud too sparse for the requested covering scale."""


class InsufficientScaleError(SigeoError):
    """Too few usable scales to fit a dimension slope."""


class DegenerateRegionError(SigeoError):
    """Metric rank drops inside a region where full rank is required."""


class OutsideRangeError(SigeoError):
    """A gradient has components outside the range of the metric."""


class SamplingError(SigeoError):
    """Monte Carlo sampling failed or produced invalid draws."""


class ConfigError(SigeoError, ValueError):
    """Malformed experiment configuration; message names the offending key."""
