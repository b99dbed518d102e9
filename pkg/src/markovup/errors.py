"""Exception types shared across the toolkit."""


class MarkovUpError(Exception):
    """Base class for all toolkit errors."""


class InvalidParams(MarkovUpError, ValueError):
    pass


class InvalidDistribution(MarkovUpError, ValueError):
    def __init__(self, run, message="probabilities must be nonnegative and sum to 1"):
        self.run = tuple(run)
        super().__init__(f"{message} (memory state {list(self.run)})")


class RunExceedsTrajectory(MarkovUpError, IndexError):
    """A monotone run reaches the last recorded state without breaking."""


class MemoryCapExceeded(MarkovUpError, RuntimeError):
    pass


class CeilingRequired(MarkovUpError, ValueError):
    pass


class TailUnknown(MarkovUpError, ValueError):
    """No tail model is available to certify an infinite sum or product."""


class Diverged(MarkovUpError, ArithmeticError):
    pass


class InfeasibleAlpha(MarkovUpError, ValueError):
    pass


class SeriesDiverges(MarkovUpError, ArithmeticError):
    pass


class NoFeasibleAlpha(MarkovUpError, ValueError):
    pass


class NonMonotoneFeasibility(MarkovUpError, RuntimeError):
    pass


class StateBudgetExceeded(MarkovUpError, RuntimeError):
    pass


class AlphaTooLarge(MarkovUpError, ArithmeticError):
    pass


class VarianceWarning(UserWarning):
    """Monte Carlo estimate whose variance is not certified finite."""


class ConfigError(MarkovUpError, ValueError):
    pass
