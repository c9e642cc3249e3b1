"""
Article citations in free text.

Recognizes "art. 16", "Art. 109^1 § 2 k.c.", "Article $109^3$ § 2 of the
Civil Code", "artykułu 415", "Art. 109¹" and the flattened "Article 1091",
which is repaired to 109^1 only when the fused map of the corpus knows it.
Lists ("art. 415 i 416", "Articles 415, 416 and 417") and ranges
("art. 13-16") cite every article they name.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional

from .errors import UnparsableMarker
from .types import ArticleId

_SUPERSCRIPTS = "⁰¹²³⁴⁵⁶⁷⁸⁹"
_FROM_SUPERSCRIPT = str.maketrans(_SUPERSCRIPTS, "0123456789")

_NUMBER = (
    r"\$?\s*(\d+)"
    rf"(?:\s*\^\s*\{{?\s*(\d+)\s*\}}?|([{_SUPERSCRIPTS}]+))?"
    r"\s*\$?\.?"
    r"(?:\s*§\s*(\d+))?"
)

CITATION_PATTERN = re.compile(
    r"(?<!\w)(?:art\.|articles?|artykuł(?:u|em|y|ów)?)\s*" + _NUMBER,
    re.IGNORECASE,
)

# Group 1 is the separator; the number groups follow as in CITATION_PATTERN.
_CONTINUATION = re.compile(
    r"\s*(,|[-–]|(?<=\s)(?:i|oraz|and)(?=\s))\s*" + _NUMBER,
    re.IGNORECASE,
)

# Longer ranges keep their endpoints only.
MAX_RANGE_SPAN = 20


@dataclass(frozen=True)
class Citation:
    """One cited article; paragraph is captured but not used for matching."""

    article_id: ArticleId
    paragraph: Optional[int] = None
    text: str = ""


def _resolve(base: str, caret: Optional[str], unicode_sup: Optional[str],
             fused_map: Optional[Mapping[str, ArticleId]]) -> Optional[ArticleId]:
    try:
        if caret:
            return ArticleId(int(base), int(caret))
        if unicode_sup:
            return ArticleId(int(base), int(unicode_sup.translate(_FROM_SUPERSCRIPT)))
        if fused_map and base in fused_map:
            return fused_map[base]
        return ArticleId(int(base))
    except UnparsableMarker:
        return None


def _range(start: ArticleId, end: ArticleId) -> list[ArticleId]:
    """Articles strictly between start and end, then end."""
    plain = start.superscript is None and end.superscript is None
    if plain and 0 < end.base - start.base <= MAX_RANGE_SPAN:
        return [ArticleId(n) for n in range(start.base + 1, end.base + 1)]
    return [end]


def extract_citations(text: str, fused_map: Optional[Mapping[str, ArticleId]] = None) -> list[Citation]:
    """All citations in order of appearance, repeats included."""
    citations: list[Citation] = []
    for match in CITATION_PATTERN.finditer(text):
        article_id = _resolve(match.group(1), match.group(2), match.group(3), fused_map)
        paragraph = int(match.group(4)) if match.group(4) else None
        if article_id is not None:
            citations.append(Citation(article_id, paragraph, match.group(0).strip()))

        # "art. 13 § 1 i 2" lists paragraphs of art. 13, not further articles.
        in_paragraphs = paragraph is not None
        previous = article_id
        pos = match.end()
        while (more := _CONTINUATION.match(text, pos)) is not None:
            pos = more.end()
            if in_paragraphs:
                continue
            following = _resolve(more.group(2), more.group(3), more.group(4), fused_map)
            if following is None:
                previous = None
                continue
            ids = _range(previous, following) if more.group(1) in "-–" and previous else [following]
            snippet = more.group(0).strip()
            citations.extend(Citation(i, None, snippet) for i in ids[:-1])
            citations.append(
                Citation(following, int(more.group(5)) if more.group(5) else None, snippet)
            )
            in_paragraphs = more.group(5) is not None
            previous = following
    return citations


def cited_articles(text: str, fused_map: Optional[Mapping[str, ArticleId]] = None) -> tuple[ArticleId, ...]:
    """Distinct cited articles, in order of first mention."""
    return tuple(dict.fromkeys(c.article_id for c in extract_citations(text, fused_map)))


def parse_article_ref(text: str, fused_map: Optional[Mapping[str, ArticleId]] = None) -> ArticleId:
    """Parse a single reference such as "109^1", "Art. 109¹" or "art. 16 § 2".

    Raises:
        UnparsableMarker: text is not an article reference.
    """
    stripped = text.strip()
    if stripped and stripped[0].isdigit():
        stripped = f"art. {stripped}"
    match = CITATION_PATTERN.fullmatch(stripped)
    if not match:
        raise UnparsableMarker(text)
    article_id = _resolve(match.group(1), match.group(2), match.group(3), fused_map)
    if article_id is None:
        raise UnparsableMarker(text)
    return article_id
