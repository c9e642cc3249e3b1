"""
File-based storage for parsed acts.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

from .errors import CorpusSchemaError, EmptyCorpus
from .types import LegalAct

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def validate_act(act: LegalAct) -> None:
    """Check the structural invariants of an act.

    Raises:
        EmptyCorpus: the act has no articles.
        CorpusSchemaError: duplicate IDs, empty article text or unit spans
            outside the article range.
    """
    if not act.articles:
        raise EmptyCorpus()
    ids = [a.id for a in act.articles]
    if len(set(ids)) != len(ids):
        raise CorpusSchemaError("article IDs are not unique")
    for article in act.articles:
        if not article.text:
            raise CorpusSchemaError(f"{article.id} has empty text")
    for unit in act.units:
        if not 0 <= unit.start <= unit.end <= len(act.articles):
            raise CorpusSchemaError(f"unit {unit.label!r} span {unit.start}..{unit.end} out of range")


def save_corpus(act: LegalAct, path: str | Path) -> Path:
    """Write an act to a JSON corpus file."""
    validate_act(act)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = {"schema_version": SCHEMA_VERSION, **act.to_dict()}
    path.write_text(json.dumps(data, indent=2, ensure_ascii=False), encoding="utf-8")
    logger.info(f"Saved {len(act.articles)} article(s) to {path}")
    return path


def _check_articles(data: dict[str, Any]) -> None:
    articles = data.get("articles")
    if not isinstance(articles, list):
        raise CorpusSchemaError("missing articles list")
    for i, entry in enumerate(articles):
        if not isinstance(entry, dict) or not {"id", "text", "char_len"} <= entry.keys():
            raise CorpusSchemaError(f"article #{i} is missing id, text or char_len")
        if entry["char_len"] != len(entry["text"]):
            raise CorpusSchemaError(f"article {entry['id']} char_len does not match its text")


def load_corpus(path: str | Path) -> LegalAct:
    """Read a JSON corpus file written by save_corpus.

    Raises:
        FileNotFoundError: path does not exist.
        CorpusSchemaError: corrupted file or schema version mismatch.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CorpusSchemaError(f"{path}: not a corpus file: {e}") from e

    if not isinstance(data, dict):
        raise CorpusSchemaError(f"{path}: expected a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise CorpusSchemaError(
            f"{path}: schema_version {version!r}, expected {SCHEMA_VERSION}"
        )

    _check_articles(data)
    try:
        act = LegalAct.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise CorpusSchemaError(f"{path}: {e}") from e
    validate_act(act)
    return act
