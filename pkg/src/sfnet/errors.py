"""Exception types shared across the package."""


class SFNetError(Exception):
    """Base class for package errors."""


class ContractError(SFNetError, ValueError):
    """An operation was called outside its preconditions."""


class IngestionError(SFNetError):
    """Too many malformed lines in a dataset file."""

    def __init__(self, message, line_numbers=()):
        super().__init__(message)
        self.line_numbers = list(line_numbers)


class EncodingError(SFNetError, KeyError):
    """A record cannot be encoded against a schema (e.g. an unknown outcome)."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class CheckpointError(SFNetError):
    """A checkpoint or cache file cannot be read or does not match."""


class TrainingDivergence(SFNetError):
    """Training loss became non-finite for a whole epoch."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log
