"""Error taxonomy shared across the evaluator.

Data errors are problems with input files or their cross-references;
numeric errors are degenerate values discovered while computing. The CLI
maps the two branches to distinct exit codes.
"""


class PersevalError(Exception):
    """Base class for every error raised by this package."""


class DataError(PersevalError):
    """Malformed, inconsistent, or incomplete input data."""


class ParseError(DataError):
    """A file could not be parsed; message carries path and line number."""


class DuplicateKeyError(DataError):
    """Two records claim the same identity."""


class ReferentialError(DataError):
    """A record points at an entity that does not exist."""


class MissingSummaryError(DataError):
    """A model lacks a generated summary for a (document, user) gold."""


class MissingRatingError(DataError):
    """A required human rating for a text pair is absent."""


class MissingIdError(DataError):
    """A lookup id is absent from a distance matrix or distributions file."""


class NumericError(PersevalError):
    """A computation received degenerate values."""


class DegenerateInputError(NumericError):
    """Input admits no meaningful statistic (e.g. zero variance)."""


class UnscorableSampleError(NumericError):
    """A corpus or sample contains no document usable for scoring."""
