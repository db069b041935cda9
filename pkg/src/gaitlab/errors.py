"""Exception types shared across the package."""


class GaitlabError(Exception):
    """Base class for all package-specific errors."""


class InputShapeError(GaitlabError):
    """Vector inputs with mismatched or invalid shapes."""


class DegenerateMotionError(GaitlabError):
    """Motion-normalized metric requested on a log with (near-)zero net motion."""


class InsufficientDataError(GaitlabError):
    """Not enough stride cycles in a contact schedule to segment it."""


class SimulationDivergedError(GaitlabError):
    """Simulator state became non-finite; the episode must be reset."""


class ConfigError(GaitlabError):
    """Invalid or unparseable experiment configuration."""


class SchemaError(GaitlabError):
    """Rollout log violates the on-disk schema contract."""
