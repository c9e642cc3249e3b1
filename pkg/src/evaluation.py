"""
Exam-style evaluation of an assistant.

Each item's answer is reduced to a chosen letter and a list of cited
articles. An item is answered correctly when the letter matches; its context
is correct when every gold article is cited and at most `tolerance` extra
articles are cited alongside them.
"""

from __future__ import annotations

import asyncio
import json
import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Literal, Mapping, Optional, Protocol, Sequence, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from .agent import AgentConfig, run_agent
from .citations import cited_articles, parse_article_ref
from .corpus import fused_superscript_map
from .errors import ModelUnavailable, SchemaError, StatuteSearchError
from .model import ModelClient
from .search import Retriever
from .types import (
    OPTION_LETTERS,
    ArticleId,
    ChatMessage,
    ExamItem,
    ExtractedResponse,
    ItemFailure,
    ItemResult,
    MetricsReport,
)

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 2
EXAM_QUESTIONS = 150
EXAM_PASS_POINTS = 100

_EMPHASIS = r"[*_]{0,3}"
_ANSWER_PHRASE = re.compile(
    r"(?:the\s+correct\s+answer\s+is|correct\s+answer|answer\s+is|answer"
    r"|(?:prawidłowa|poprawna)\s+odpowiedź(?:\s+to|\s+jest)?|odpowiedź(?:\s+to|\s+jest)?)"
    rf"{_EMPHASIS}\s*[:\-–]?{_EMPHASIS}\s*(?:option\s+|opcja\s+)?{_EMPHASIS}[\"'(]?{_EMPHASIS}"
    rf"([abc])(?={_EMPHASIS}(?:\)|[.:,]|[ \t]*$))",
    re.IGNORECASE | re.MULTILINE,
)
_STANDALONE_OPTION = re.compile(
    rf"^\s*{_EMPHASIS}\(?([abc])\){_EMPHASIS}\s", re.IGNORECASE | re.MULTILINE
)


OptionLetter = Literal["a", "b", "c"]


def _letter(value: Any) -> Any:
    return value.strip().lower() if isinstance(value, str) else value


class ExamRecord(BaseModel):
    """One dataset line as it appears on disk; unknown keys are ignored."""

    id: str = Field(..., min_length=1)
    question: str = Field(..., min_length=1)
    options: dict[str, str]
    gold_answer: OptionLetter
    gold_articles: list[Union[str, int]] = Field(..., min_length=1)

    normalize_answer = field_validator("gold_answer", mode="before")(_letter)

    @field_validator("options")
    @classmethod
    def exactly_abc(cls, options: dict[str, str]) -> dict[str, str]:
        if sorted(options) != list(OPTION_LETTERS):
            raise ValueError(f"options must be exactly a, b, c, got {sorted(options)}")
        if not all(text.strip() for text in options.values()):
            raise ValueError("option texts must be non-empty")
        return {letter: options[letter] for letter in OPTION_LETTERS}


class ExtractionReply(BaseModel):
    answer: Optional[OptionLetter] = None
    articles: list[Union[str, int]] = Field(default_factory=list)

    normalize_answer = field_validator("answer", mode="before")(_letter)


def _first_problem(error: ValidationError) -> str:
    problem = error.errors()[0]
    where = ".".join(map(str, problem["loc"]))
    return f"{where}: {problem['msg']}" if where else problem["msg"]


def parse_item(data: Any, line: int) -> ExamItem:
    """Validate one dataset record.

    Raises:
        SchemaError: the record breaks the item schema.
    """
    if not isinstance(data, dict):
        raise SchemaError(line, "expected a JSON object")
    try:
        record = ExamRecord.model_validate(data)
        gold_articles = tuple(dict.fromkeys(parse_article_ref(str(a)) for a in record.gold_articles))
    except ValidationError as e:
        raise SchemaError(line, _first_problem(e)) from e
    except ValueError as e:
        raise SchemaError(line, str(e)) from e

    return ExamItem(
        id=record.id,
        question=record.question,
        options=record.options,
        gold_answer=record.gold_answer,
        gold_articles=gold_articles,
    )


def load_dataset(path: str | Path) -> list[ExamItem]:
    """Read a JSONL dataset, one ExamItem per line; blank lines are skipped.

    Raises:
        SchemaError: a malformed line or a duplicate item id.
    """
    items: list[ExamItem] = []
    seen: set[str] = set()
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaError(line_no, f"invalid JSON: {e.msg}") from e
        item = parse_item(data, line_no)
        if item.id in seen:
            raise SchemaError(line_no, f"duplicate item id {item.id!r}")
        seen.add(item.id)
        items.append(item)
    logger.info(f"Loaded {len(items)} item(s) from {path}")
    return items


def extract_choice(raw_text: str) -> Optional[str]:
    """The chosen option letter, or None when the text does not commit to one."""
    match = _ANSWER_PHRASE.search(raw_text)
    if match:
        return match.group(1).lower()
    letters = {m.group(1).lower() for m in _STANDALONE_OPTION.finditer(raw_text)}
    if len(letters) == 1:
        return letters.pop()
    return None


def extract_structured(
    raw_text: str, fused_map: Optional[Mapping[str, ArticleId]] = None
) -> ExtractedResponse:
    return ExtractedResponse(
        choice=extract_choice(raw_text),
        cited_articles=cited_articles(raw_text, fused_map),
        raw_text=raw_text,
    )


class Extractor(Protocol):
    async def extract(self, raw_text: str) -> ExtractedResponse: ...


class PatternExtractor:
    """Deterministic pattern rules."""

    def __init__(self, fused_map: Optional[Mapping[str, ArticleId]] = None):
        self.fused_map = fused_map

    async def extract(self, raw_text: str) -> ExtractedResponse:
        return extract_structured(raw_text, self.fused_map)


EXTRACTION_PROMPT = """\
Read the exam answer below. Reply with JSON only, in the form
{"answer": "a" | "b" | "c" | null, "articles": ["<article number>", ...]}
where "answer" is the option the text chooses and "articles" lists every
cited article number (e.g. "415" or "109^1"), without paragraph numbers."""


class ModelExtractor:
    """Asks a model for {"answer", "articles"}; falls back to the patterns."""

    def __init__(self, model: ModelClient, fused_map: Optional[Mapping[str, ArticleId]] = None):
        self.model = model
        self.fallback = PatternExtractor(fused_map)
        self.fused_map = fused_map

    async def extract(self, raw_text: str) -> ExtractedResponse:
        messages = [ChatMessage.system(EXTRACTION_PROMPT), ChatMessage.user(raw_text)]
        try:
            reply = await self.model.chat(messages, None, 0.0)
            parsed = ExtractionReply.model_validate_json(reply.content or "")
            articles = tuple(
                dict.fromkeys(parse_article_ref(str(a), self.fused_map) for a in parsed.articles)
            )
        except (ModelUnavailable, ValueError) as e:
            logger.warning(f"Model extraction failed ({e}), using patterns")
            return await self.fallback.extract(raw_text)
        return ExtractedResponse(choice=parsed.answer, cited_articles=articles, raw_text=raw_text)


def score_item(item: ExamItem, resp: ExtractedResponse, tolerance: int = DEFAULT_TOLERANCE) -> ItemResult:
    cited = set(resp.cited_articles)
    context_ok = set(item.gold_articles) <= cited and len(cited) <= len(item.gold_articles) + tolerance
    return ItemResult(
        answer_ok=resp.choice == item.gold_answer,
        context_ok=context_ok,
        item_id=item.id,
    )


def aggregate(results: Sequence[ItemResult], failures: Sequence[ItemFailure] = ()) -> MetricsReport:
    return MetricsReport(
        n_items=len(results),
        answer_score=sum(r.answer_ok for r in results),
        context_score=sum(r.context_ok for r in results),
        joint_score=sum(r.joint_ok for r in results),
        per_item=tuple(results),
        failures=tuple(failures),
    )


class Subject(str, Enum):
    """What answers the questions: the bare model or the retrieval agent."""

    RAW = "raw"
    AGENT = "agent"


@dataclass
class EvalConfig:
    agent: AgentConfig = field(default_factory=AgentConfig)
    parallelism: int = 4
    tolerance: int = DEFAULT_TOLERANCE
    transcripts_path: Optional[str] = None


@dataclass
class _ItemRun:
    item: ExamItem
    result: ItemResult
    response: str = ""
    extracted: Optional[ExtractedResponse] = None
    transcript: Optional[dict[str, Any]] = None
    error: Optional[str] = None

    def to_dict(self, subject: Subject) -> dict[str, Any]:
        record: dict[str, Any] = {
            "id": self.item.id,
            "subject": subject.value,
            "result": self.result.to_dict(),
        }
        if self.error is not None:
            record["error"] = self.error
        else:
            record["response"] = self.response
            record["extracted"] = self.extracted.to_dict() if self.extracted else None
        if self.transcript is not None:
            record["transcript"] = self.transcript
        return record


async def _ask(
    item: ExamItem,
    subject: Subject,
    config: EvalConfig,
    model: ModelClient,
    retriever: Optional[Retriever],
    fused_map: Optional[Mapping[str, ArticleId]],
) -> tuple[str, dict[str, Any]]:
    if subject == Subject.AGENT:
        if retriever is None:
            raise ValueError("the agent subject needs a retriever")
        answer = await run_agent(item.prompt(), retriever, model, config.agent, fused_map)
        return answer.final_text, answer.to_dict()

    messages = [ChatMessage.system(config.agent.system_prompt), ChatMessage.user(item.prompt())]
    reply = await model.chat(messages, None, config.agent.temperature)
    messages.append(reply)
    return reply.content, {"messages": [m.to_dict() for m in messages]}


async def run_eval(
    dataset: Sequence[ExamItem],
    subject: Subject,
    config: EvalConfig,
    model: ModelClient,
    retriever: Optional[Retriever] = None,
    extractor: Optional[Extractor] = None,
    fused_map: Optional[Mapping[str, ArticleId]] = None,
) -> MetricsReport:
    """Ask every item, extract, score and aggregate.

    Items run concurrently, at most config.parallelism at a time. An item
    whose answer cannot be obtained scores all-false and is listed in
    failures.
    """
    if fused_map is None and retriever is not None:
        fused_map = fused_superscript_map(e.article.id for e in retriever.index.entries)
    extractor = extractor or PatternExtractor(fused_map)
    semaphore = asyncio.Semaphore(max(1, config.parallelism))

    async def one(item: ExamItem) -> _ItemRun:
        async with semaphore:
            try:
                response, transcript = await _ask(item, subject, config, model, retriever, fused_map)
            except StatuteSearchError as e:
                logger.warning(f"Item {item.id} failed: {e}")
                return _ItemRun(item, ItemResult(False, False, item.id), error=f"{type(e).__name__}: {e}")
            extracted = await extractor.extract(response)
            result = score_item(item, extracted, config.tolerance)
            return _ItemRun(item, result, response, extracted, transcript)

    runs = await asyncio.gather(*(one(item) for item in dataset))

    if config.transcripts_path:
        write_transcripts(runs, subject, config.transcripts_path)

    failures = [ItemFailure(r.item.id, r.error) for r in runs if r.error is not None]
    report = aggregate([r.result for r in runs], failures)
    logger.info(
        f"Evaluated {report.n_items} item(s): answer {report.answer_score}, "
        f"context {report.context_score}, joint {report.joint_score}, failures {len(failures)}"
    )
    return report


def write_transcripts(runs: Sequence[_ItemRun], subject: Subject, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for run in runs:
            f.write(json.dumps(run.to_dict(subject), ensure_ascii=False) + "\n")
    return path


def write_report(report: MetricsReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2, ensure_ascii=False), encoding="utf-8")
    return path


def load_report(path: str | Path) -> MetricsReport:
    return MetricsReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def pass_mark(n_items: int) -> int:
    """Points needed to pass, scaled from 100 of 150."""
    return math.ceil(n_items * EXAM_PASS_POINTS / EXAM_QUESTIONS)


def relative_improvement(baseline: MetricsReport, candidate: MetricsReport, metric: str = "joint_score") -> float:
    """Percentage change of metric from baseline to candidate.

    Raises:
        ValueError: unknown metric, or a zero baseline with a non-zero candidate.
    """
    if metric not in ("answer_score", "context_score", "joint_score"):
        raise ValueError(f"unknown metric {metric!r}")
    before, after = getattr(baseline, metric), getattr(candidate, metric)
    if before == 0:
        if after == 0:
            return 0.0
        raise ValueError(f"baseline {metric} is 0, relative improvement is undefined")
    return (after - before) / before * 100


def render_table(rows: Sequence[tuple[str, MetricsReport]]) -> str:
    """One row per assistant: answer, context and joint scores, and pass status."""
    header = ("Assistant", "Answer score", "Context score", "Joint score", "Passed")
    body = [
        (
            name,
            f"{r.answer_score}/{r.n_items}",
            f"{r.context_score}/{r.n_items}",
            f"{r.joint_score}/{r.n_items}",
            "yes" if r.n_items and r.answer_score >= pass_mark(r.n_items) else "no",
        )
        for name, r in rows
    ]
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    lines = [" | ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in [header, *body]]
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines)
