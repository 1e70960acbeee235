"""Exception hierarchy for the gsd package.

Everything raised on purpose derives from :class:`GsdError`, so callers
(including the CLI) can branch on a single base class. Subclasses mirror
the distinct failure modes of the public API.
"""

from __future__ import annotations


class GsdError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(GsdError, ValueError):
    """An argument violates its contract (non-finite, out of range, wrong type)."""


class InsufficientDataError(GsdError, ValueError):
    """Too few samples to perform the requested fit or split."""


class DegenerateDataError(GsdError, ValueError):
    """Input data carries no usable variation (e.g. all values identical)."""


class InsufficientClassDataError(InsufficientDataError):
    """A class is absent or too small to estimate its per-feature Gaussian."""


class UntrainableDatasetError(GsdError):
    """No feature of the dataset admits a decision boundary; no split survives."""


class InsufficientBatchError(InsufficientDataError):
    """Inference batch has too few rows for mixture estimation."""


class SchemaMismatchError(GsdError):
    """Batch columns do not match the features referenced by the model."""


class ModelFormatError(GsdError, ValueError):
    """A serialized model document is malformed; message carries position info."""


class UnsupportedVersionError(ModelFormatError):
    """A serialized model declares a schema version this build cannot read."""


class CsvFormatError(GsdError, ValueError):
    """A CSV input cannot be parsed; message carries row/column position."""


class MissingLabelColumnError(CsvFormatError):
    """The requested label column is not present in the CSV header."""


class NonBinaryLabelError(CsvFormatError):
    """The label column contains values other than 0 and 1."""
