"""Exception types shared across the package.

Each carries an ``exit_code`` used by the command-line front end.
"""


class ConvexNNError(Exception):
    exit_code = 1


class InvalidArgument(ConvexNNError, ValueError):
    exit_code = 2


class ParseError(InvalidArgument):
    pass


class UnsupportedVersion(InvalidArgument):
    pass


class UnsupportedAlpha(InvalidArgument):
    pass


class BudgetExceeded(ConvexNNError):
    exit_code = 3


class NonConverged(ConvexNNError):
    exit_code = 4

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ToleranceNotMet(NonConverged):
    pass


class ReductionFailed(NonConverged):
    pass


class RankDeficient(InvalidArgument):
    pass


class ParityViolation(InvalidArgument):
    pass


class NumericalFailure(NonConverged):
    pass
