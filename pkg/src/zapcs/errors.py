"""Exception hierarchy shared by all modules."""


class ZapError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ZapError, ValueError):
    """Invalid user input; the CLI maps these to exit code 2."""


class NumericalError(ZapError):
    """A numerical precondition failed; the CLI maps these to exit code 3."""


class RankDeficient(NumericalError):
    pass


class DimensionMismatch(ConfigError):
    pass


class InvalidSparsity(ConfigError):
    pass


class ZeroSignal(ConfigError):
    pass


class ZeroColumn(ConfigError):
    pass


class TooLarge(ConfigError):
    """An exhaustive enumeration was requested beyond its size guard."""


class MuOutOfRange(ConfigError):
    pass


class KMinTooSmall(ConfigError):
    pass


class K0TooSmall(ConfigError):
    pass


class InitOutOfSolutionSpace(ConfigError):
    pass


class DegenerateInput(ConfigError):
    pass


class NotMinimizer(NumericalError):
    """The supplied reference point is not the unique l1 minimizer."""


class Infeasible(NumericalError):
    pass


class Degenerate(NumericalError):
    pass
