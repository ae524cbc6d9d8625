"""Exception hierarchy shared across the package."""


class CefrError(Exception):
    """Base class for all package errors."""


class DataError(CefrError, ValueError):
    """Malformed or inconsistent input data."""


class ResourceError(CefrError):
    """A required resource file is missing or unreadable."""

    def __init__(self, family, path, reason="missing"):
        self.family = family
        self.path = str(path)
        super().__init__(f"{family}: resource {self.path!r} is {reason}")


class DegenerateInputError(CefrError, ValueError):
    """A formula was evaluated on counts that make it undefined."""


class ModelFileError(CefrError):
    """Base class for model container problems."""


class ModelVersionError(ModelFileError):
    pass


class ModelTruncatedError(ModelFileError):
    pass


class ModelCorruptError(ModelFileError):
    pass


class FingerprintError(ModelFileError):
    """Feature layout of a model does not match the pipeline it is used with."""
