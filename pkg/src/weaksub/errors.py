"""Exception hierarchy shared by all modules."""


class WeaksubError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(WeaksubError, ValueError):
    pass


class NotPositiveDefinite(WeaksubError, ValueError):
    """A matrix that must be positive definite has an eigenvalue or pivot below tolerance."""


class DegenerateResidual(WeaksubError, ValueError):
    """A variable is fully explained by the conditioning set."""


class DegenerateSample(WeaksubError, RuntimeError):
    pass


class InstanceValidationError(WeaksubError, ValueError):
    """An instance violates one of its structural invariants."""


class GroundSetTooLarge(WeaksubError, ValueError):
    pass


class SetTooLarge(WeaksubError, ValueError):
    pass


class ElementInSet(WeaksubError, ValueError):
    pass


class InvalidPhi(WeaksubError, ValueError):
    pass


class InfeasibleCompletion(WeaksubError, ValueError):
    pass


class NoBijection(WeaksubError, ValueError):
    pass


class NonTermination(WeaksubError, RuntimeError):
    pass
