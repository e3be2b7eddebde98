"""Exception types shared across the simulator."""


class HetsimError(Exception):
    """Base class for all simulator errors."""


class InvalidParameter(HetsimError, ValueError):
    pass


class PlacementInfeasible(HetsimError):
    """Constrained node placement exhausted its attempt budget."""


class ConsistencyError(HetsimError):
    """Internal state is missing something it must have (e.g. a shadowing sample)."""


class UndefinedRatio(HetsimError, ZeroDivisionError):
    pass


class ConfigError(HetsimError):
    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class LayoutExhausted(PlacementInfeasible):
    """Every drop of an experiment was infeasible."""
