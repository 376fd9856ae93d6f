"""Exception hierarchy shared by the library and the command line."""


class ConfigError(ValueError):
    """A configuration or channel document is invalid (CLI exit code 2)."""


class ChannelSpecError(ConfigError):
    """The channel document is malformed or not row-stochastic."""


class AssumptionError(ConfigError):
    """A standing assumption of a construction does not hold for the channel."""


class InfeasibleError(RuntimeError):
    """Parameters are valid but exceed a resource ceiling (CLI exit code 3)."""
