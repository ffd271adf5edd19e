"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter is outside its allowed domain."""


class RankError(IndexError):
    """A node rank is outside the valid range of the graph or distribution."""


class EdgeNotFoundError(KeyError):
    """An edge expected to be in a graph is missing."""


class ConfigError(ValueError):
    """An experiment or CLI configuration is invalid."""
