"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Bad configuration, unreadable dataset or mismatched checkpoint."""


class NumericalError(ArithmeticError):
    """Non-finite gradient or parameter during training."""
