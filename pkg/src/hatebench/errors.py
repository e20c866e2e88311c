"""Error taxonomy shared across modules; the CLI maps these to exit codes."""


class HatebenchError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(HatebenchError):
    """Bad, unknown or inconsistent run configuration."""


class CheckpointError(ConfigError):
    """Checkpoint file is unreadable or incompatible with the run configuration."""


class IngestionError(HatebenchError):
    """Missing or malformed dataset / resource file."""


class TrainingError(HatebenchError):
    """Model training failed."""
