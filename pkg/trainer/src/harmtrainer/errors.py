class TrainerError(Exception):
    """Base for everything this package raises on purpose."""


class SchemaError(TrainerError):
    """An input file does not follow the canonical corpus schema."""


class ConfigError(TrainerError):
    """A training configuration value is unusable."""
