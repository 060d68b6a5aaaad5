"""Exception hierarchy shared by all modules."""


class WarpedHeatError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameter(WarpedHeatError, ValueError):
    pass


class PoleAt(WarpedHeatError, ValueError):
    def __init__(self, z, what="function"):
        self.z = z
        super().__init__(f"{what} has a pole at {z!r}")


class NoConvergence(WarpedHeatError, ArithmeticError):
    pass


class DivergentVolume(WarpedHeatError):
    pass


class DivergentCoefficient(WarpedHeatError):
    pass


class TurningPoint(WarpedHeatError):
    def __init__(self, y_turn, s_turn):
        self.y_turn = y_turn
        self.s_turn = s_turn
        super().__init__(f"geodesic turns at y={y_turn:.12g} (s={s_turn:.12g})")


class TruncationInsufficient(WarpedHeatError):
    def __init__(self, message, required=None):
        self.required = required
        super().__init__(message)


class CutoffTooLarge(WarpedHeatError):
    pass


class OutsideConvergence(WarpedHeatError, ValueError):
    pass


class UnsupportedCrossSection(WarpedHeatError):
    pass


class NotExactDerivative(WarpedHeatError):
    pass


class InsufficientDerivatives(WarpedHeatError, ValueError):
    pass


class IndexOutOfRange(WarpedHeatError, IndexError):
    pass


class OnSpectrum(WarpedHeatError, ValueError):
    pass


class TailBoundViolated(WarpedHeatError):
    pass


class ConvergenceFailure(WarpedHeatError):
    pass


class StepBudget(WarpedHeatError, ValueError):
    pass
