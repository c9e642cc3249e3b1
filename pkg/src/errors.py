"""
Exceptions raised by statute-search.

Input problems subclass ValueError as well, so callers that only know about
ValueError keep working.
"""

from __future__ import annotations


class StatuteSearchError(Exception):
    """Base class for all statute-search errors."""


# Corpus


class EmptyInput(StatuteSearchError, ValueError):
    """Source text contains no article marker at all."""

    def __init__(self, message: str = "source text contains no article marker") -> None:
        super().__init__(message)


class MalformedHeader(StatuteSearchError, ValueError):
    """A structural header line could not be classified."""

    def __init__(self, line_no: int, line: str) -> None:
        self.line_no = line_no
        self.line = line
        super().__init__(f"line {line_no}: malformed structural header: {line!r}")


class DuplicateArticle(StatuteSearchError, ValueError):
    """The same canonical article ID appears twice in one act."""

    def __init__(self, article_id: object, line_no: int | None = None) -> None:
        self.article_id = article_id
        self.line_no = line_no
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"duplicate article {article_id}{where}")


class UnparsableMarker(StatuteSearchError, ValueError):
    """Text does not follow the article marker grammar."""

    def __init__(self, marker_text: str) -> None:
        self.marker_text = marker_text
        super().__init__(f"unparsable article marker: {marker_text!r}")


class CorpusSchemaError(StatuteSearchError, ValueError):
    """A corpus file is corrupted or was written with another schema version."""


class EmptyCorpus(StatuteSearchError, ValueError):
    """An act without articles was used where at least one is required."""

    def __init__(self, message: str = "corpus contains no articles") -> None:
        super().__init__(message)


# Scoring and retrieval


class LengthMismatch(StatuteSearchError, ValueError):
    """score_part was called with parts of different lengths."""

    def __init__(self, part_len: int, query_len: int) -> None:
        super().__init__(f"part length {part_len} != query length {query_len}")


class EmptyQuery(StatuteSearchError, ValueError):
    """Query is empty after normalization."""

    def __init__(self, message: str = "query is empty after normalization") -> None:
        super().__init__(message)


class DimensionMismatch(StatuteSearchError, ValueError):
    """Vectors of different dimensions were mixed."""

    def __init__(self, expected: int, got: int) -> None:
        self.expected = expected
        self.got = got
        super().__init__(f"vector dimension {got} does not match index dimension {expected}")


class UnknownArticleId(StatuteSearchError, ValueError):
    """Vector file references an article missing from the corpus."""

    def __init__(self, article_id: object, line_no: int | None = None) -> None:
        self.article_id = article_id
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"unknown article id {article_id}{where}")


class ZeroVector(StatuteSearchError, ValueError):
    """Cosine similarity is undefined for a zero vector."""


# Agent and model


class ModelUnavailable(StatuteSearchError):
    """The model endpoint failed, timed out, or returned a malformed payload."""


class BudgetExhausted(StatuteSearchError):
    """Not even one retrieved article fits the context budget."""


# Evaluation and configuration


class SchemaError(StatuteSearchError, ValueError):
    """A dataset line does not match the exam item schema."""

    def __init__(self, line: int, message: str) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}")


class ConfigError(StatuteSearchError, ValueError):
    """Invalid or incomplete run configuration."""
