"""Exception types shared across the package."""


class WavemarkError(Exception):
    """Base class for package-specific failures."""


class ConfigError(WavemarkError, ValueError):
    """Invalid configuration value or an unrealizable hyperparameter combination."""


class CheckpointError(WavemarkError):
    """Checkpoint is malformed, from an unsupported version, or does not match the expected configuration."""


class DataError(WavemarkError):
    """Dataset directory or image file cannot be used."""


class TrainingDiverged(WavemarkError):
    """The optimization produced a non-finite loss."""
