"""Exception types raised by garouter."""

from __future__ import annotations


class GARouterError(Exception):
    """Base class for all garouter errors."""


class ValidationError(GARouterError, ValueError):
    """Parameter set violates one or more model invariants.

    ``violations`` lists every violated invariant, not only the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NonPositiveHopping(ValidationError):
    pass


class TooFewSites(ValidationError):
    pass


class MismatchedAtomCount(ValidationError):
    pass


class OutOfBand(GARouterError, ValueError):
    """Energy lies outside the propagating band of a waveguide."""


class PoleAtThirdState(GARouterError, ZeroDivisionError):
    """E coincides with the rotated third-state frequency while Omega != 0."""


class AtResolventPole(GARouterError, ZeroDivisionError):
    """E is within the pole guard of an eigenvalue of the atom chain."""


class SingularSystem(GARouterError, ArithmeticError):
    """The assembled scattering system has no unique solution."""


class BranchOverflow(GARouterError, ValueError):
    """A shifted wavenumber leaves the principal branch [0, pi]."""


class InsufficientResolution(GARouterError, ValueError):
    """Energy grid too coarse for a period estimate."""
