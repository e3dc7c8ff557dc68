"""Exception hierarchy shared by all modules."""


class SplineError(ValueError):
    """Base class for every error raised by ctspline."""


class DimensionMismatch(SplineError):
    pass


class NotControllable(SplineError):
    pass


class NotObservable(SplineError):
    pass


class NonFiniteInput(SplineError):
    pass


class NonIncreasingTimes(SplineError):
    pass


class NonPositiveTime(SplineError):
    pass


class OutOfHorizon(SplineError):
    """Evaluation time outside ``[0, T]``."""


class QuadratureNonConvergence(SplineError):
    pass


class SingularSystem(SplineError):
    pass


class StepSizeFailure(SplineError):
    pass


class MaxIterationsExceeded(SplineError):
    """Raised by callers that treat a non-converged solve as fatal."""


class ParseError(SplineError):
    pass


class DuplicateTime(SplineError):
    pass


class NonPositiveWeight(SplineError):
    pass
