"""Exception types raised across the package."""


class IrregularPressureError(Exception):
    """Base class for all package errors."""


class NotPrimitive(IrregularPressureError):
    """Transition matrix is not primitive; no constructive specification gap."""

    def __init__(self, pair, power):
        self.pair = pair
        self.power = power
        super().__init__(
            f"symbol {pair[1]} unreachable from {pair[0]} in exactly {power} steps"
        )


class InsufficientLength(IrregularPressureError):
    """A coordinate needed by the computation lies beyond the materialized word."""


class BudgetExceeded(IrregularPressureError):
    def __init__(self, message, count=None, k=None):
        self.count = count
        self.k = k
        super().__init__(message)


class NonConvergence(IrregularPressureError):
    pass


class NotACover(IrregularPressureError):
    def __init__(self, witness):
        self.witness = witness
        super().__init__(f"point {witness!r} is not covered")


class DegenerateMeasures(IrregularPressureError):
    pass


class TargetMissed(IrregularPressureError):
    def __init__(self, k, achieved, required):
        self.k = k
        self.achieved = achieved
        self.required = required
        super().__init__(
            f"level {k}: (1/n_k) log M_k = {achieved:.6g} < required {required:.6g}"
        )


class CountingBoundFailed(IrregularPressureError):
    def __init__(self, n, lhs, rhs):
        self.n = n
        self.lhs = lhs
        self.rhs = rhs
        super().__init__(f"counting bound fails at n={n}: log lhs {lhs:.6g} < {rhs:.6g}")


class MassBoundFailed(IrregularPressureError):
    def __init__(self, witness):
        self.witness = witness
        super().__init__(f"ball mass bound fails: {witness}")


class NoSignChange(IrregularPressureError):
    pass
