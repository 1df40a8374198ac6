"""Exception hierarchy.

Every error carries the process exit code the command-line front end maps it to.
"""


class HetJBError(Exception):
    exit_code = 1


class UsageError(HetJBError):
    exit_code = 2


class InvalidInputError(HetJBError, ValueError):
    exit_code = 3


class ParseError(InvalidInputError):
    """CSV ingestion failure.

    ``code`` distinguishes the failure kind: ``missing-file``, ``missing-column``,
    ``non-numeric``, ``bad-date`` or ``duplicate-date``.
    """

    def __init__(self, message, code, row=None):
        super().__init__(message)
        self.code = code
        self.row = row


class TransformError(InvalidInputError):
    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class StatisticalError(HetJBError, ArithmeticError):
    exit_code = 4


class SingularSystemError(StatisticalError):
    pass


class DegenerateBandwidthError(StatisticalError):
    pass


class DegenerateVarianceError(StatisticalError):
    pass


class ReplicateFailure(StatisticalError):
    def __init__(self, message, seed):
        super().__init__(message)
        self.seed = seed


class BootstrapFailure(StatisticalError):
    def __init__(self, message, seeds):
        super().__init__(message)
        self.seeds = list(seeds)


class ExperimentError(StatisticalError):
    pass


class OutputError(HetJBError, OSError):
    exit_code = 5
