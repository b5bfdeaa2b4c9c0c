"""Exception and warning types raised across the package."""


class GapVerifyError(Exception):
    """Base class for all package errors."""


class EmptyInterior(GapVerifyError):
    pass


class NonConvex(GapVerifyError):
    pass


class NoAdmissibleNodes(GapVerifyError):
    pass


class StencilEscape(GapVerifyError):
    pass


class SingularDrift(GapVerifyError):
    pass


class NoConvergence(GapVerifyError):
    pass


class PerronFailure(GapVerifyError):
    """Ground state changes sign, or the lowest eigenvalue is not simple."""


class DegenerateExcited(GapVerifyError):
    pass


class TailTooFat(GapVerifyError):
    pass


class LinearSolveFailure(GapVerifyError):
    pass


class NonConvexPotential(GapVerifyError):
    pass


class ConfigError(GapVerifyError):
    pass


class TruncationUnderflow(UserWarning):
    """A truncated series or image sum dropped more than 1e-12."""


class PoleProximity(UserWarning):
    """Pairs too close to the tan pole were excluded from a slack check."""
