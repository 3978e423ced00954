"""Exception types raised by gridframe."""


class GridframeError(Exception):
    """Base class for all gridframe errors."""


class ConfigError(GridframeError, ValueError):
    """Invalid signal configuration, scenario or input data."""


class DivergenceError(GridframeError, ArithmeticError):
    """The adaptive estimator produced non-finite weights."""

    def __init__(self, sample_index: int, message: str | None = None):
        self.sample_index = sample_index
        super().__init__(message or f"ACLMS weights diverged at sample {sample_index}")


class ImbalanceOverflowError(GridframeError, ValueError):
    """|kappa| >= 1: the negative sequence dominates and balancing is undefined."""
