"""Exception hierarchy shared by the simulator, the CLI and the HTTP API"""


class PoolsimError(Exception):
    """Base class for every error raised by poolsim"""


class ConfigError(PoolsimError, ValueError):
    """Invalid scenario, simulation or pool configuration

    ``field`` names the offending key (dotted path, e.g. ``sim.miners.2.power``) so
    callers can anchor the message to a line of the source document.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field

    def __str__(self):
        message = super().__str__()
        if self.field:
            return f'{self.field}: {message}'
        return message


class ModelError(PoolsimError, ValueError):
    """Arithmetic input outside the domain of a formula"""


class StrategyError(PoolsimError):
    """A strategy was asked to handle an event it cannot legally see"""


class DetectionError(PoolsimError):
    """Anomalous observation, malformed block DAG or unsupported audit"""
