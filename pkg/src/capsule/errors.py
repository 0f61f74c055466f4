"""Exception types raised across the package."""


class CapsuleError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(CapsuleError, ValueError):
    """Invalid parameter, configuration value or unpopulated model field."""


class ContractError(CapsuleError):
    """A caller broke an operation's precondition (e.g. Stick mode with a moving capsule)."""


class LiftOffError(CapsuleError):
    """The contact force dropped to zero or below; the model assumes permanent contact."""


class DegeneracyError(CapsuleError):
    """The slip-modified mass matrix lost positive definiteness."""


class DivergenceError(CapsuleError):
    """Non-finite state, or an event cascade that never settles."""


class TrainingError(CapsuleError):
    """Non-finite loss during network training."""

    def __init__(self, message: str, epoch: int):
        super().__init__(f"{message} (epoch {epoch})")
        self.epoch = epoch
