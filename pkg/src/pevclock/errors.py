"""Exception hierarchy shared by all pevclock modules."""


class PevError(Exception):
    """Base class for every error raised by this package."""


class BasisMismatch(PevError, ValueError):
    pass


class ZeroProjection(PevError):
    """The projector annihilates the state: a probability-zero branch."""


class EigenFailure(PevError):
    pass


class NonUnitary(PevError, ValueError):
    pass


class NotHermitian(PevError, ValueError):
    pass


class GridTooCoarse(PevError, ValueError):
    pass


class NonConvergence(PevError):
    pass


class NotNormalized(PevError, ValueError):
    pass


class ShiftTooLarge(PevError, ValueError):
    pass


class GridMismatch(PevError, ValueError):
    pass


class TruncationTooSmall(PevError):
    pass


class ZeroBranch(PevError):
    """Branch with vanishing normalization; it can never be sampled."""


class DomainError(PevError, ValueError):
    pass


class ConfigError(PevError, ValueError):
    pass
