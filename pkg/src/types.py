"""
Types and data models for statute-search.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional

from .errors import UnparsableMarker

_RENDERED_ID = re.compile(r"^(?:Art\.\s*)?(\d+)(?:\^(\d+))?\.?$")


def approx_tokens(text: str) -> int:
    # ~4 characters per token
    return math.ceil(len(text) / 4)


@dataclass(frozen=True)
class ArticleId:
    """Canonical article identifier: base number plus optional superscript."""

    base: int
    superscript: Optional[int] = None

    def __post_init__(self) -> None:
        if self.base < 1:
            raise UnparsableMarker(f"Art. {self.base}")
        if self.superscript is not None and self.superscript < 1:
            raise UnparsableMarker(f"Art. {self.base}^{self.superscript}")

    @property
    def short(self) -> str:
        """ID without the "Art." prefix, e.g. "109^1"."""
        if self.superscript is None:
            return str(self.base)
        return f"{self.base}^{self.superscript}"

    @property
    def fused(self) -> str:
        """Digits as they look after a PDF export flattened the superscript."""
        return str(self.base) if self.superscript is None else f"{self.base}{self.superscript}"

    def sort_key(self) -> tuple[int, int]:
        return (self.base, self.superscript or 0)

    def __str__(self) -> str:
        return f"Art. {self.short}"

    @classmethod
    def parse(cls, text: str) -> "ArticleId":
        """Parse the rendered form ("Art. 109^1" or "109^1")."""
        match = _RENDERED_ID.match(text.strip())
        if not match:
            raise UnparsableMarker(text)
        sup = match.group(2)
        return cls(base=int(match.group(1)), superscript=int(sup) if sup else None)


class UnitKind(str, Enum):
    """Kinds of structural units, outermost first."""

    BOOK = "Book"
    TITLE = "Title"
    DIVISION = "Division"
    CHAPTER = "Chapter"
    SECTION = "Section"

    @property
    def depth(self) -> int:
        return list(UnitKind).index(self)


@dataclass(frozen=True)
class StructuralUnit:
    """A book, title, division, chapter or section of an act.

    span is the half-open range [start, end) of article indices it covers.
    """

    kind: UnitKind
    label: str
    start: int
    end: int
    caption: str = ""

    @property
    def span(self) -> range:
        return range(self.start, self.end)

    def header_text(self) -> str:
        return f"{self.label}\n{self.caption}" if self.caption else self.label

    def to_dict(self) -> dict[str, Any]:
        result: dict[str, Any] = {
            "kind": self.kind.value,
            "label": self.label,
            "span": [self.start, self.end],
        }
        if self.caption:
            result["caption"] = self.caption
        return result

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "StructuralUnit":
        start, end = data["span"]
        return cls(
            kind=UnitKind(data["kind"]),
            label=data["label"],
            start=int(start),
            end=int(end),
            caption=data.get("caption", ""),
        )


@dataclass(frozen=True)
class Article:
    """One article of an act: the retrieval document."""

    id: ArticleId
    text: str
    hierarchy_path: tuple[str, ...] = ()

    @property
    def char_len(self) -> int:
        return len(self.text)

    @property
    def approx_token_len(self) -> int:
        return approx_tokens(self.text)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": str(self.id),
            "text": self.text,
            "path": list(self.hierarchy_path),
            "char_len": self.char_len,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Article":
        return cls(
            id=ArticleId.parse(data["id"]),
            text=data["text"],
            hierarchy_path=tuple(data.get("path", [])),
        )


@dataclass(frozen=True)
class LegalAct:
    """A parsed legal act: title, structural units and articles in source order."""

    title: str
    units: tuple[StructuralUnit, ...] = ()
    articles: tuple[Article, ...] = ()

    def article_ids(self) -> list[ArticleId]:
        return [a.id for a in self.articles]

    def get(self, article_id: ArticleId) -> Optional[Article]:
        for article in self.articles:
            if article.id == article_id:
                return article
        return None

    def to_dict(self) -> dict[str, Any]:
        return {
            "title": self.title,
            "units": [u.to_dict() for u in self.units],
            "articles": [a.to_dict() for a in self.articles],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "LegalAct":
        return cls(
            title=data.get("title", ""),
            units=tuple(StructuralUnit.from_dict(u) for u in data.get("units", [])),
            articles=tuple(Article.from_dict(a) for a in data.get("articles", [])),
        )


@dataclass(frozen=True)
class Score:
    """Positional match score of a document and the window that achieved it."""

    value: int
    best_offset: int = 0


@dataclass(frozen=True)
class ScoredDocument:
    """A retrieved article with its score and 1-based rank.

    score is a Score for positional matching, a cosine similarity otherwise.
    """

    article: Article
    score: Score | float
    rank: int
    position: int

    @property
    def value(self) -> float:
        return self.score.value if isinstance(self.score, Score) else self.score

    def to_dict(self) -> dict[str, Any]:
        result: dict[str, Any] = {
            "rank": self.rank,
            "id": str(self.article.id),
            "score": self.value,
            "position": self.position,
        }
        if isinstance(self.score, Score):
            result["best_offset"] = self.score.best_offset
        return result


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"
    TOOL = "tool"


@dataclass(frozen=True)
class ToolCall:
    """A tool invocation requested by the model."""

    tool_name: str
    arguments: dict[str, Any] = field(default_factory=dict)
    id: str = "call_0"

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.id, "tool_name": self.tool_name, "arguments": self.arguments}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ToolCall":
        return cls(
            tool_name=data["tool_name"],
            arguments=dict(data.get("arguments", {})),
            id=data.get("id", "call_0"),
        )


@dataclass(frozen=True)
class ChatMessage:
    """One message of a conversation with the model."""

    role: Role
    content: str = ""
    tool_call: Optional[ToolCall] = None
    tool_call_id: Optional[str] = None  # set on Tool messages

    @classmethod
    def system(cls, content: str) -> "ChatMessage":
        return cls(Role.SYSTEM, content)

    @classmethod
    def user(cls, content: str) -> "ChatMessage":
        return cls(Role.USER, content)

    @classmethod
    def assistant(cls, content: str = "", tool_call: Optional[ToolCall] = None) -> "ChatMessage":
        return cls(Role.ASSISTANT, content, tool_call=tool_call)

    @classmethod
    def tool(cls, content: str, tool_call_id: str) -> "ChatMessage":
        return cls(Role.TOOL, content, tool_call_id=tool_call_id)

    def to_dict(self) -> dict[str, Any]:
        result: dict[str, Any] = {"role": self.role.value, "content": self.content}
        if self.tool_call:
            result["tool_call"] = self.tool_call.to_dict()
        if self.tool_call_id:
            result["tool_call_id"] = self.tool_call_id
        return result

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ChatMessage":
        tool_call = data.get("tool_call")
        return cls(
            role=Role(data["role"]),
            content=data.get("content", ""),
            tool_call=ToolCall.from_dict(tool_call) if tool_call else None,
            tool_call_id=data.get("tool_call_id"),
        )


OPTION_LETTERS = ("a", "b", "c")


@dataclass(frozen=True)
class ExamItem:
    """A single-choice exam question with its gold answer and gold articles."""

    id: str
    question: str
    options: dict[str, str]
    gold_answer: str
    gold_articles: tuple[ArticleId, ...]

    def prompt(self) -> str:
        """Question followed by the labelled options."""
        lines = [self.question.strip()]
        lines.extend(f"{letter}) {self.options[letter]}" for letter in OPTION_LETTERS)
        return "\n".join(lines)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "question": self.question,
            "options": dict(self.options),
            "gold_answer": self.gold_answer,
            "gold_articles": [a.short for a in self.gold_articles],
        }


@dataclass(frozen=True)
class ExtractedResponse:
    """Structured view of an assistant answer."""

    choice: Optional[str]
    cited_articles: tuple[ArticleId, ...]
    raw_text: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "choice": self.choice,
            "cited_articles": [a.short for a in self.cited_articles],
        }


@dataclass(frozen=True)
class ItemResult:
    """Per-item outcome; joint_ok is answer_ok and context_ok."""

    answer_ok: bool
    context_ok: bool
    item_id: str = ""

    @property
    def joint_ok(self) -> bool:
        return self.answer_ok and self.context_ok

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.item_id,
            "answer_ok": self.answer_ok,
            "context_ok": self.context_ok,
            "joint_ok": self.joint_ok,
        }


@dataclass(frozen=True)
class ItemFailure:
    """An item whose response could not be obtained."""

    item_id: str
    error: str

    def to_dict(self) -> dict[str, Any]:
        return {"id": self.item_id, "error": self.error}


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate answer/context/joint counts over a dataset."""

    n_items: int
    answer_score: int
    context_score: int
    joint_score: int
    per_item: tuple[ItemResult, ...] = ()
    failures: tuple[ItemFailure, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_items": self.n_items,
            "answer_score": self.answer_score,
            "context_score": self.context_score,
            "joint_score": self.joint_score,
            "per_item": [r.to_dict() for r in self.per_item],
            "failures": [f.to_dict() for f in self.failures],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "MetricsReport":
        return cls(
            n_items=int(data["n_items"]),
            answer_score=int(data["answer_score"]),
            context_score=int(data["context_score"]),
            joint_score=int(data["joint_score"]),
            per_item=tuple(
                ItemResult(
                    answer_ok=bool(r["answer_ok"]),
                    context_ok=bool(r["context_ok"]),
                    item_id=r.get("id", ""),
                )
                for r in data.get("per_item", [])
            ),
            failures=tuple(
                ItemFailure(item_id=f["id"], error=f["error"]) for f in data.get("failures", [])
            ),
        )
