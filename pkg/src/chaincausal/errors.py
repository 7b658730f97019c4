"""Exception hierarchy shared by all modules."""


class ChainCausalError(Exception):
    """Base class for every error raised by this package."""


class InvalidGraph(ChainCausalError, ValueError):
    pass


class UnknownVertex(ChainCausalError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NotAcyclic(ChainCausalError, ValueError):
    pass


class NotChainGraph(ChainCausalError, ValueError):
    pass


class NotADigraph(ChainCausalError, ValueError):
    pass


class BadQuery(ChainCausalError, ValueError):
    pass


class SizeMismatch(ChainCausalError, ValueError):
    pass


class CapExceeded(ChainCausalError, RuntimeError):
    def __init__(self, what, cap):
        super().__init__(f"{what} exceeds enumeration cap of {cap}")
        self.cap = cap


class SupportViolation(ChainCausalError, ValueError):
    pass


class NotPositiveDefinite(ChainCausalError, ValueError):
    pass


class SingularBlock(ChainCausalError, ArithmeticError):
    pass


class NotDecomposable(ChainCausalError, ValueError):
    pass


class ConvergenceFailure(ChainCausalError, RuntimeError):
    def __init__(self, message, best_residual, best=None):
        super().__init__(f"{message} (best residual {best_residual:.3g})")
        self.best_residual = best_residual
        self.best = best


class SearchFailure(ChainCausalError, RuntimeError):
    pass


class BudgetExceeded(ChainCausalError, RuntimeError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
