"""Typed exceptions shared across the package."""


class QdpError(Exception):
    """Base class for all errors raised by this package."""


class EmptyPowerSetError(QdpError):
    """An operation that requires a nonempty power set received an empty one."""


class PowerCapError(QdpError):
    """A power exceeds the configured exponent cap."""


class SlopeSetTooSmallError(QdpError):
    """The supplied slope set does not contain all pivot slopes of the power set."""


class UnstableScaleError(QdpError):
    """The pair (1/a, lambda) does not lie in any region of the subpartition."""


class WrongTimeScaleError(QdpError):
    """The supplied time scale matches neither visible scale for the range."""


class SignError(QdpError):
    """Degree combination makes a diffusive limit impossible for a -> infinity."""


class StrongStochasticityError(QdpError):
    """Drift is not dominated by diffusion near the origin."""


class HypothesisViolationError(QdpError):
    """A structural hypothesis of the dd-curve construction is not met."""


class NoPositiveSimpleRootError(QdpError):
    """The level polynomial has no simple positive root."""


class ZeroDiffusionAtBranchError(QdpError):
    """Diffusion vanishes on the equilibrium branch, contradicting drift domination."""


class BranchValidityError(QdpError):
    """The spatial scale is not negligible next to the branch position."""


class DomainError(QdpError):
    """Argument outside the analysis domain (0, 1]^2."""


class KindError(QdpError):
    """Operation not defined for this bifurcation kind."""


class CancellationToZeroError(QdpError):
    """Both drift and diffusion cancel to zero identically."""


class RateNegativityError(QdpError):
    """A transition rate evaluated negative during simulation."""


class HorizonError(QdpError):
    """Requested comparison time exceeds an ensemble horizon."""


class UsageError(QdpError):
    """Invalid configuration or command-line usage."""
