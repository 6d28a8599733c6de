"""Exception types raised across the package."""


class DimensionError(ValueError):
    """Operands have incompatible matrix dimensions."""


class InvalidState(ValueError):
    """A matrix is not a valid (real) density matrix."""


class InvalidPovm(ValueError):
    """Effects are not PSD or do not sum to the identity."""


class ImpossibleOutcome(ValueError):
    """An outcome has zero probability under every hypothesis with support."""


class EmptySubset(ValueError):
    pass


class ConvergenceError(RuntimeError):
    """The SDP solver stopped without reaching the requested duality gap."""

    def __init__(self, message, gap):
        super().__init__(f"{message} (best gap {gap:.3e})")
        self.gap = gap


class PolicyGap(KeyError):
    """A reachable belief state has no decision in the policy."""


class NumericsError(FloatingPointError):
    pass


class BoundViolation(AssertionError):
    """A computed gap exceeded a proven bound."""
