"""Exception types raised across the package."""


class LintsLabError(Exception):
    """Base class for all package errors."""


class InvalidParam(LintsLabError, ValueError):
    pass


class DimensionMismatch(LintsLabError, ValueError):
    pass


class NonSymmetric(LintsLabError, ValueError):
    def __init__(self, i: int, j: int, gap: float):
        super().__init__(f"matrix not symmetric at entries ({i},{j})/({j},{i}): |diff|={gap:.3e}")
        self.i, self.j, self.gap = i, j, gap


class ZeroMatrix(LintsLabError, ValueError):
    pass


class NonFiniteRho(LintsLabError, ArithmeticError):
    pass


class DegenerateArm(LintsLabError, ValueError):
    pass


class InvalidCovariance(LintsLabError, ValueError):
    pass


class RejectionExhausted(LintsLabError, RuntimeError):
    pass


class EmptyInput(LintsLabError, ValueError):
    pass
