"""
Toolkit exceptions

All errors subclass ValueError so existing `except ValueError` handlers
keep working. The CLI maps them to exit codes (2 config, 3 statistics).
"""


class ToolkitError(ValueError):
    """Base class for every error raised by the toolkit"""


class ConfigurationError(ToolkitError):
    """Invalid experiment, environment, agent or config-file settings"""


class StatisticalPreconditionError(ToolkitError):
    """A statistical operation was asked for something the data cannot support"""


class SeedPlanMismatchError(StatisticalPreconditionError):
    """Paired analysis requested on runs that do not share seed plans"""


class EnvironmentStateError(ToolkitError):
    """Environment used out of protocol (step before reset, bad action)"""
