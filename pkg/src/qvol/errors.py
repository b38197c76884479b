"""Exception hierarchy shared by all qvol modules."""


class QvolError(Exception):
    """Base class for every error raised by qvol."""


class InvalidArgument(QvolError, ValueError):
    pass


class MeasurementImpossible(QvolError, ValueError):
    """Collapse requested onto an index that carries zero probability."""


class DegeneratePosterior(QvolError, ArithmeticError):
    """Every likelihood in a Bayes update vanished, even in log space."""


class UndefinedStatistic(QvolError, ArithmeticError):
    pass


class NoSolution(QvolError, ValueError):
    """Option price at or below intrinsic value; no implied vol exists."""


class BracketError(QvolError, ValueError):
    """Option price above the value reachable inside the vol bracket."""


class ConfigError(QvolError, ValueError):
    """Invalid experiment configuration. ``key`` names the offending field."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"{key}: {message}")
