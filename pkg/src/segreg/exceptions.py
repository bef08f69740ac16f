"""Exception hierarchy shared by the library and the command line front end."""


class SegregError(Exception):
    """Base class for all segreg failures."""


class DataFormatError(SegregError, ValueError):
    """Input data could not be parsed or violates the dataset invariants."""


class ConfigError(SegregError, ValueError):
    """Tuning parameters or run settings are invalid."""


class InfeasibleError(ConfigError):
    """No segmentation satisfies the requested constraints."""


class SolverError(SegregError, RuntimeError):
    """The Lasso solver failed to produce a certified solution."""
