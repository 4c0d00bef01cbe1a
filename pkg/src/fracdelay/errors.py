"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class AccuracyError(ArithmeticError):
    """No evaluation path could certify the requested tolerance."""


class NonConvergence(RuntimeError):
    """An iteration failed to reach its stopping tolerance.

    Carries enough context to diagnose the failure: the residual history
    for global iterations, or the node index for stepping schemes.
    """

    def __init__(self, message, residual_history=None, node=None):
        super().__init__(message)
        self.residual_history = residual_history
        self.node = node
