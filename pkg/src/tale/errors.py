"""Exception hierarchy shared by every module.

The CLI maps the three top-level families onto exit codes:
``PropertyFailure`` -> 1, ``ConfigError`` -> 2, ``DomainError`` -> 3.
"""

from __future__ import annotations


class TaleError(Exception):
    """Base class for all package errors."""


class ConfigError(TaleError):
    """Bad user input: unknown model, malformed scenario, invalid parameter."""


class DomainError(TaleError):
    """A computation left the region where the model is defined or trusted."""


class PropertyFailure(TaleError):
    """A verified property did not hold."""


# metric models
class InvalidParameter(ConfigError):
    pass


class OutOfDomain(DomainError):
    pass


class FDUnstable(DomainError):
    pass


# geodesic engine
class LeftDomain(DomainError):
    def __init__(self, t: float, message: str = ""):
        super().__init__(message or f"geodesic left the valid domain at t={t:.6g}")
        self.t = t


class StepUnderflow(DomainError):
    pass


class NoConvergence(DomainError):
    pass


class AmbiguousSolution(DomainError):
    pass


class NotAFrame(ConfigError):
    pass


# holonomy and pseudo-group
class NoLoops(DomainError):
    pass


class RadiusTooLarge(DomainError):
    pass


class NoDeckGroup(ConfigError):
    pass


class NotInDomain(DomainError):
    pass


class SlideFailed(DomainError):
    def __init__(self, t: float, message: str = ""):
        super().__init__(message or f"sliding lost the loop at t={t:.6g}")
        self.t = t


# short bases
class AxiomViolation(PropertyFailure):
    def __init__(self, violations: list[str]):
        head = "; ".join(violations[:5])
        more = f" (+{len(violations) - 5} more)" if len(violations) > 5 else ""
        super().__init__(f"translational-subset axioms violated: {head}{more}")
        self.violations = violations


class DegenerateSet(DomainError):
    pass


class OutOfRange(DomainError):
    pass


class NotCertified(PropertyFailure):
    pass


# asymptotics
class IntegralDiverges(DomainError):
    pass


class CurvatureUnderflow(DomainError):
    pass


class HypothesisViolated(PropertyFailure):
    pass


# topology
class UnknownEndType(ConfigError):
    pass


class InconsistentInvariants(ConfigError):
    pass


class NotFinite(ConfigError):
    pass


class InfiniteOrder(ConfigError):
    pass


class BoundTooSmall(PropertyFailure):
    pass


class NotConverged(PropertyFailure):
    pass


class SupportViolation(ConfigError):
    """A test function does not vanish at the ends of its sample interval."""


class MissingEta(ConfigError):
    """An ALE descriptor has neither an eta value nor the data to derive one."""
