"""Exception hierarchy shared by all simulator modules."""


class SimError(Exception):
    """Base class for every error raised by wdmesh."""


class InvalidArgument(SimError, ValueError):
    pass


class MissingCredentials(SimError):
    pass


class ConnectionRefused(SimError):
    pass


class AlreadyMember(SimError):
    pass


class ConfigRejected(SimError):
    """A GatewayConfig (or strategy precondition) was rejected."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class PreconditionViolated(SimError):
    pass


class ScopeExhausted(SimError):
    pass


class NoRoute(SimError):
    pass


class ControlTimeout(SimError):
    pass


class MissingParameter(SimError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class SchedulingError(SimError):
    pass


class ScenarioError(SimError):
    """Scenario file could not be parsed; ``errors`` holds line-numbered messages."""

    def __init__(self, errors: list[str]):
        super().__init__("\n".join(errors))
        self.errors = list(errors)
