"""
Segmentation of a legal act's plain text into article-level documents.

The act is read line by line. Structural headers (KSIĘGA, TYTUŁ, DZIAŁ,
ROZDZIAŁ, Oddział) open units; an "Art. N." marker starts a new article that
runs until the next marker or header.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .errors import DuplicateArticle, EmptyInput, MalformedHeader, UnparsableMarker
from .types import Article, ArticleId, LegalAct, StructuralUnit, UnitKind

logger = logging.getLogger(__name__)

SUPERSCRIPT_DIGITS = "⁰¹²³⁴⁵⁶⁷⁸⁹"
_FROM_SUPERSCRIPT = str.maketrans(SUPERSCRIPT_DIGITS, "0123456789")

# "Art. 109^1." / "Art. 109¹." at the start of a line
MARKER_PATTERN = re.compile(
    rf"^Art\.\s*(\d+)(?:\s*\^\s*(\d+)|([{SUPERSCRIPT_DIGITS}]+))?\.(?=\s|$)"
)
_MARKER_TEXT = re.compile(
    rf"^\s*Art\.\s*(\d+)(?:\s*\^\s*(\d+)|([{SUPERSCRIPT_DIGITS}]+))?\.?\s*$"
)

HEADER_KEYWORDS: dict[str, UnitKind] = {
    "KSIĘGA": UnitKind.BOOK,
    "TYTUŁ": UnitKind.TITLE,
    "DZIAŁ": UnitKind.DIVISION,
    "ROZDZIAŁ": UnitKind.CHAPTER,
    "ODDZIAŁ": UnitKind.SECTION,
    "Oddział": UnitKind.SECTION,
}
_HEADER_LINE = re.compile(rf"^({'|'.join(HEADER_KEYWORDS)})(?:\s+(.*))?$")

_ORDINAL_WORDS = (
    "PIERWSZA", "DRUGA", "TRZECIA", "CZWARTA", "PIĄTA",
    "SZÓSTA", "SIÓDMA", "ÓSMA", "DZIEWIĄTA", "DZIESIĄTA",
)
_UNIT_LABEL = re.compile(
    rf"^(?:[IVXLCDM]+|\d+|{'|'.join(_ORDINAL_WORDS)})"
    rf"(?:\s*\^\s*\d+|[{SUPERSCRIPT_DIGITS}]+|[a-z])?"
    r"\.?(?:\s*\(.*\))?$"
)


@dataclass(frozen=True)
class StripRules:
    """Line patterns removed from the raw export before parsing."""

    footnotes: tuple[str, ...] = (
        rf"^\s*[{SUPERSCRIPT_DIGITS}]+\s*[)⁾]",
        r"^\s*\*+\)",
        r"^\s*\d+\)\s+(?:Zmiany tekstu|Niniejsz|Ze zmian|W brzmieniu ustalonym|Dodany przez|Uchylony przez|Utracił moc)",
    )
    annotations: tuple[str, ...] = (r"^\s*\[[^\]]*\]\s*$",)
    publication: tuple[str, ...] = (
        r"^\s*©\s*Kancelaria Sejmu",
        r"^\s*s\.\s*\d+\s*/\s*\d+\s*$",
        r"^\s*Dz\.\s*U\.\s*(?:z\s+)?\d{4}\b.*poz\.\s*\d+\s*$",
        r"^\s*Opracowano na podstawie",
        r"^\s*Data wydruku",
        r"^\s*\d{4}-\d{2}-\d{2}\s*$",
    )
    _compiled: tuple[re.Pattern[str], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        patterns = self.footnotes + self.annotations + self.publication
        object.__setattr__(self, "_compiled", tuple(re.compile(p) for p in patterns))

    def matches(self, line: str) -> bool:
        return any(p.search(line) for p in self._compiled)


DEFAULT_STRIP_RULES = StripRules()


def normalize_source(raw: str, rules: StripRules = DEFAULT_STRIP_RULES) -> str:
    """Remove footnotes, editorial annotations and publication headers/footers.

    Every other line, including its line ending, is kept verbatim.

    Raises:
        EmptyInput: raw contains no article marker.
    """
    lines = raw.splitlines(keepends=True)
    if not any(MARKER_PATTERN.match(line.strip()) for line in lines):
        raise EmptyInput()

    kept = [line for line in lines if not rules.matches(line)]
    stripped = len(lines) - len(kept)
    if stripped:
        logger.info(f"Stripped {stripped} non-normative line(s)")
    return "".join(kept)


def fused_superscript_map(ids: Iterable[ArticleId | str]) -> dict[str, ArticleId]:
    """Map flattened digits ("1091") to known superscripted articles (109^1).

    Keys that collide with a plain article number in the same list are left
    out, since the flattened form is then ambiguous.
    """
    parsed = [i if isinstance(i, ArticleId) else ArticleId.parse(i) for i in ids]
    plain = {str(i.base) for i in parsed if i.superscript is None}
    result: dict[str, ArticleId] = {}
    for article_id in parsed:
        if article_id.superscript is None:
            continue
        if article_id.fused in plain:
            logger.warning(f"Flattened form {article_id.fused} is ambiguous, not repaired")
            continue
        result[article_id.fused] = article_id
    return result


def _article_id(base: str, caret: Optional[str], unicode_sup: Optional[str],
                fused_map: Optional[Mapping[str, ArticleId]]) -> ArticleId:
    if caret:
        return ArticleId(int(base), int(caret))
    if unicode_sup:
        return ArticleId(int(base), int(unicode_sup.translate(_FROM_SUPERSCRIPT)))
    if fused_map and base in fused_map:
        return fused_map[base]
    return ArticleId(int(base))


def canonical_article_id(
    marker_text: str, fused_map: Optional[Mapping[str, ArticleId]] = None
) -> ArticleId:
    """Resolve an article marker ("Art. 109^1.", "Art. 109¹.", "Art. 1091.") to its ID.

    A flattened superscript is only repaired when fused_map knows it.

    Raises:
        UnparsableMarker: marker_text does not follow the marker grammar.
    """
    match = _MARKER_TEXT.match(marker_text)
    if not match:
        raise UnparsableMarker(marker_text)
    return _article_id(match.group(1), match.group(2), match.group(3), fused_map)


@dataclass
class _OpenUnit:
    kind: UnitKind
    label: str
    start: int
    caption: list[str] = field(default_factory=list)
    end: int = -1

    def freeze(self) -> StructuralUnit:
        return StructuralUnit(
            kind=self.kind,
            label=self.label,
            start=self.start,
            end=self.end,
            caption="\n".join(self.caption),
        )


def parse_act(clean: str, fused_map: Optional[Mapping[str, ArticleId]] = None) -> LegalAct:
    """Split normalized act text into structural units and articles.

    Lines before the first header or marker form the title. Lines directly
    after a header and before the next article are the header's caption.

    Raises:
        MalformedHeader: a header keyword line with an unrecognized label
            outside a caption position.
        DuplicateArticle: the same canonical ID appears twice.
    """
    title_lines: list[str] = []
    units: list[_OpenUnit] = []
    stack: list[_OpenUnit] = []
    articles: list[Article] = []
    seen: dict[ArticleId, int] = {}

    current_id: Optional[ArticleId] = None
    current_lines: list[str] = []
    current_path: tuple[str, ...] = ()
    state = "title"

    def finish_article() -> None:
        nonlocal current_id, current_lines
        if current_id is not None:
            articles.append(Article(current_id, "\n".join(current_lines), current_path))
        current_id, current_lines = None, []

    for line_no, raw_line in enumerate(clean.splitlines(), start=1):
        line = raw_line.strip()
        if not line:
            continue

        marker = MARKER_PATTERN.match(line)
        if marker:
            finish_article()
            article_id = _article_id(marker.group(1), marker.group(2), marker.group(3), fused_map)
            if article_id in seen:
                raise DuplicateArticle(article_id, line_no)
            seen[article_id] = line_no
            current_id = article_id
            current_lines = [line]
            current_path = tuple(u.label for u in stack)
            state = "article"
            continue

        header = _HEADER_LINE.match(line)
        if header:
            keyword, label = header.group(1), (header.group(2) or "").strip()
            if label and _UNIT_LABEL.match(label):
                finish_article()
                kind = HEADER_KEYWORDS[keyword]
                while stack and stack[-1].kind.depth >= kind.depth:
                    stack.pop().end = len(articles)
                unit = _OpenUnit(kind=kind, label=line, start=len(articles))
                units.append(unit)
                stack.append(unit)
                state = "header"
                continue
            if state == "header":
                units[-1].caption.append(line)
                continue
            if keyword.isupper() or state != "article":
                raise MalformedHeader(line_no, line)

        if state == "title":
            title_lines.append(line)
        elif state == "header":
            units[-1].caption.append(line)
        else:
            current_lines.append(line)

    finish_article()
    for unit in stack:
        unit.end = len(articles)

    act = LegalAct(
        title="\n".join(title_lines),
        units=tuple(u.freeze() for u in units),
        articles=tuple(articles),
    )
    check_ordering(act)
    logger.info(f"Parsed {len(act.articles)} article(s) and {len(act.units)} unit(s)")
    return act


def check_ordering(act: LegalAct) -> list[str]:
    """Report places where article numbering does not strictly increase."""
    warnings: list[str] = []
    for prev, cur in zip(act.articles, act.articles[1:]):
        if cur.id.sort_key() <= prev.id.sort_key():
            message = f"{cur.id} follows {prev.id} out of order"
            logger.warning(message)
            warnings.append(message)
    return warnings


def render_act(act: LegalAct) -> str:
    """Rebuild the act's non-blank lines from title, headers and article bodies."""
    parts: list[str] = [act.title] if act.title else []
    pending = list(act.units)
    for index, article in enumerate(act.articles):
        while pending and pending[0].start <= index:
            parts.append(pending.pop(0).header_text())
        parts.append(article.text)
    parts.extend(unit.header_text() for unit in pending)
    return "\n".join(parts)
