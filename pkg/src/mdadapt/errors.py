"""Exception types shared across the package."""


class MdadaptError(Exception):
    """Base class for all package errors."""


class ShapeError(MdadaptError):
    """Operand dimensions do not compose."""


class ConfigError(MdadaptError):
    """Invalid configuration value or combination."""


class DataError(MdadaptError):
    """Malformed or inconsistent input data."""


class ContractError(MdadaptError):
    """Caller violated an API precondition."""


class TrainingDivergedError(MdadaptError):
    """A loss became non-finite during training."""

    def __init__(self, epoch, step, message=""):
        self.epoch = epoch
        self.step = step
        detail = message or "non-finite loss"
        super().__init__(f"training diverged at epoch {epoch}, step {step}: {detail}")


class NormalizationError(MdadaptError):
    """Vector cannot be length-normalized (zero norm)."""
