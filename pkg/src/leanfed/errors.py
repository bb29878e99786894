class ConfigError(ValueError):
    """Invalid sizes, parameters or experiment configuration."""


class ParseError(ValueError):
    """Malformed input file; the message carries the offending line."""


class NumericError(ArithmeticError):
    pass


class StalledRound(RuntimeError):
    """No device finished local training this round."""
