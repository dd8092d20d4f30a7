"""Exception hierarchy shared by every convexcert module."""


class ConvexCertError(Exception):
    pass


class ContractError(ConvexCertError, ValueError):
    """An argument violated a documented precondition (shape, sign, range)."""


class UsageError(ConvexCertError):
    """Bad caller input at the API or CLI level; the CLI maps it to exit code 2."""


class SamplingExhaustedError(ConvexCertError):
    pass


class EvaluationError(ConvexCertError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class InvalidObjectiveError(ConvexCertError, ValueError):
    pass


class DegenerateReferenceError(ConvexCertError):
    pass


class IllPosedConjugateError(ConvexCertError):
    pass


class NonConvergenceError(ConvexCertError):
    def __init__(self, message, best=None, grad_residual=None):
        super().__init__(message)
        self.best = best
        self.grad_residual = grad_residual


class SingularMatrixError(ConvexCertError):
    pass


class DegenerateInterpolationError(ConvexCertError):
    pass


class InconsistentOptimumError(ConvexCertError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class DivergenceError(ConvexCertError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class InvalidConstantsError(ConvexCertError, ValueError):
    pass
