"""Exception types raised across the package."""


class PcraError(Exception):
    """Base class for all package errors."""


class InvalidTrajectoryError(PcraError, ValueError):
    pass


class ConfigurationError(PcraError, ValueError):
    pass


class ShapeError(PcraError, ValueError):
    pass


class CatalogError(PcraError, KeyError):
    def __str__(self) -> str:  # KeyError would repr() the message
        return str(self.args[0]) if self.args else ""


class DegenerateScalerError(PcraError, ValueError):
    pass


class TrainingError(PcraError, RuntimeError):
    """Training diverged; ``epoch`` is the 1-based epoch where the loss went NaN."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class NoCoverageError(PcraError, LookupError):
    """A (feature, class, zone, horizon) cell has too few samples to use."""


class IngestError(PcraError, ValueError):
    """Malformed trajectory input; carries the offending line or scene."""

    def __init__(self, message: str, line: int | None = None, scene_id: str | None = None):
        super().__init__(message)
        self.line = line
        self.scene_id = scene_id


class ArtifactError(PcraError, OSError):
    """A stage input file is missing or carries the wrong version."""
