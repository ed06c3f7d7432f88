"""Exception types shared across the package."""


class AitdError(Exception):
    """Base class for all toolkit errors (CLI maps these to exit code 2)."""


class CorpusError(AitdError):
    """Corpus loading, validation, generation, or splitting failed."""


class FeatureError(AitdError):
    """Feature extraction failed: bad vocabulary, dense file, or dimension mismatch."""


class TrainingError(AitdError):
    """Training preconditions violated (single-class labels, non-finite features, ...)."""


class ModelFormatError(AitdError):
    """A model file is unreadable or fails its integrity checks."""
