"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid configuration or invalid input artifact (CLI exit code 2)."""


class CorpusFormatError(ConfigError):
    """A corpus file is malformed or fails validation; message names the line."""


class TrainingDivergedError(RuntimeError):
    """Non-finite loss during training; message carries epoch/batch diagnostics."""
