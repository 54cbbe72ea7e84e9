"""Exception types raised across collapse_lab."""


class CollapseLabError(Exception):
    """Base class for all library errors."""


class ZeroState(CollapseLabError, ValueError):
    pass


class InvalidDensity(CollapseLabError, ValueError):
    pass


class BadHorizon(CollapseLabError, ValueError):
    pass


class BadThreshold(CollapseLabError, ValueError):
    pass


class DegenerateEigenvalues(CollapseLabError, ValueError):
    """No finite NOWEN time exists because a == b."""


class ReflectRequired(CollapseLabError, RuntimeError):
    pass


class GridTooCoarse(CollapseLabError, RuntimeError):
    pass


class RecordReinteraction(CollapseLabError, RuntimeError):
    """A pointer slice was asked to interact a second time."""


class ConfigError(CollapseLabError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message
