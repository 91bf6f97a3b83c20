"""Exception hierarchy for the devil toolkit.

Every error raised by the library derives from :class:`DevilError` so batch
drivers can catch one type and keep going.
"""


class DevilError(Exception):
    """Base class for all toolkit errors."""


class FormatError(DevilError):
    """A file does not conform to its container format (bad magic, truncated
    payload, unknown section tag, malformed row)."""


class TooFewFramesError(DevilError):
    """A video holds fewer than two frames and cannot be scored."""


class InconsistencyError(DevilError):
    """Mutually inconsistent dimensions (mixed frame sizes, feature sections
    that disagree on the frame count, wrong flow-field shape)."""


class ValidationError(DevilError):
    """A value violates its domain contract (grade outside 1..5, quality
    outside [0,1], NaN payload, duplicate id, bad generator parameters)."""


class MissingInputError(DevilError):
    """A required input (feature section, quality metric, table) is absent."""


class UndefinedSimilarityError(DevilError):
    """Cosine similarity requested for a zero vector."""


class UndefinedMetricError(DevilError):
    """A statistic is undefined for the given data (zero variance, a single
    grade level, no cross-grade pairs)."""


class UnderdeterminedError(DevilError):
    """Fewer training rows than regression parameters."""


class ToolError(DevilError):
    """An external executable failed or is missing; carries captured output."""


class ParseError(DevilError):
    """Free text could not be mapped to a known naturalness level."""
