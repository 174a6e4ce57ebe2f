"""Exception hierarchy for multiseq.

Every error raised by the package derives from :class:`MultiseqError`. Each class
carries the process exit code the command-line interface reports for it.
"""

from __future__ import annotations


class MultiseqError(Exception):
    """Base exception for all multiseq errors."""

    exit_code = 1


class UsageError(MultiseqError):
    """Invalid arguments or API misuse."""

    exit_code = 1


class ConfigurationError(UsageError):
    """Invalid model, training or file configuration."""


class DataError(MultiseqError):
    """Base class for problems with input data."""

    exit_code = 2


class DatasetError(DataError):
    """Corpus files are missing, empty, malformed or misaligned."""


class ImageIndexError(DatasetError):
    """An image id has no row in the feature index."""


class VocabularyError(DataError):
    """A token id is out of range for its vocabulary."""


class AlignmentError(DataError):
    """A word-alignment link is malformed or out of sentence bounds."""


class CheckpointError(DataError):
    """A checkpoint file cannot be loaded."""


class NumericError(MultiseqError):
    """A forward operation produced non-finite values."""

    exit_code = 3


class DimensionError(NumericError):
    """Operand shapes are incompatible for an operation."""
