"""Exception types shared across modules."""


class NumericError(RuntimeError):
    """A quantity that must stay finite did not."""


class DivergenceError(NumericError):
    """An iterative update blew up; usually a too-large step size."""


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""
