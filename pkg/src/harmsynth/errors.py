"""Exception types shared across the package."""


class HarmSynthError(Exception):
    """Base class for all errors raised by this package."""


class IngestError(HarmSynthError):
    """Raised when a raw dataset file cannot be converted to a corpus."""


class UnmappedLabelError(IngestError):
    """Raised when a source label has no entry in the label mapping."""

    def __init__(self, label: str) -> None:
        super().__init__(f"no mapping for source label: {label!r}")
        self.label = label


class SplitError(HarmSynthError):
    """Raised when a corpus cannot be partitioned into train/val/test."""


class TemplateError(HarmSynthError):
    """Raised when a prompt template is missing a required placeholder."""


class SeedPoolError(HarmSynthError):
    """Raised when the corpus cannot supply the requested seed pool."""


class ConfigError(HarmSynthError):
    """Raised when a run configuration file is invalid."""


class PredictionFormatError(HarmSynthError):
    """Raised when a prediction file violates the JSONL contract."""
