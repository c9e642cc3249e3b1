"""
Single-agent question answering over a retriever tool.

The model gets the system prompt and the question. Each time it calls the
retriever tool with a (usually reformulated) query, the top-k articles are
fitted into what is left of the context budget and returned as a tool
message. The loop ends with the model's final answer, or, once the
tool-call ceiling is hit, with a forced answer from the context gathered so
far.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Sequence

from .citations import cited_articles
from .corpus import fused_superscript_map
from .errors import BudgetExhausted, ConfigError, EmptyQuery
from .model import ModelClient, ToolSpec
from .search import DEFAULT_K, Index, PositionalRetriever, Retriever
from .types import ArticleId, ChatMessage, ScoredDocument, approx_tokens

logger = logging.getLogger(__name__)

DEFAULT_SYSTEM_PROMPT = """\
You are a helpful assistant specializing in Polish law. You will receive questions from an exam, each consisting of a question or an incomplete sentence followed by three possible answers labeled a, b, and c.

Your task is to:
1. Choose the correct answer.
2. Provide a detailed explanation for your choice.
3. Refer to the relevant article(s) in the one of polish regulations.

Please ensure your responses are precise and informative. Respond in polish."""

RETRIEVER_TOOL = "retriever"

FORCE_FINAL_PROMPT = (
    "The retrieval limit has been reached. Answer the question now using only "
    "the articles provided above, and cite the articles you rely on."
)

NO_MATCHES = "No matching articles."
ALREADY_PROVIDED = "All matching articles were already provided above."
BUDGET_FULL = "No further articles fit in the remaining context budget."


@dataclass
class AgentConfig:
    """Agent loop settings. temperature stays 0 for reproducible runs."""

    max_tool_calls: int = 3
    k: int = DEFAULT_K
    context_budget_tokens: int = 8000
    temperature: float = 0.0
    system_prompt: str = DEFAULT_SYSTEM_PROMPT

    def validate(self, index: Optional[Index] = None) -> None:
        """Raises ConfigError if a setting is out of range for the index."""
        if self.max_tool_calls < 1:
            raise ConfigError(f"max_tool_calls must be >= 1, got {self.max_tool_calls}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if index is not None and len(index):
            largest = max(e.article.approx_token_len for e in index.entries)
            if self.context_budget_tokens <= largest:
                raise ConfigError(
                    f"context_budget_tokens ({self.context_budget_tokens}) must exceed "
                    f"the largest article ({largest} tokens)"
                )


@dataclass
class AgentTranscript:
    messages: list[ChatMessage] = field(default_factory=list)
    tool_call_count: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "messages": [m.to_dict() for m in self.messages],
            "tool_call_count": self.tool_call_count,
        }


@dataclass
class AgentAnswer:
    """Final answer of one agent run.

    retrieved holds every article the retriever returned; delivered the ones
    that made it into the model's context. ungrounded lists cited articles
    outside retrieved.
    """

    final_text: str
    cited_articles: tuple[ArticleId, ...]
    transcript: AgentTranscript
    retrieval_queries: list[str] = field(default_factory=list)
    retrieved: tuple[ArticleId, ...] = ()
    delivered: tuple[ArticleId, ...] = ()
    ungrounded: tuple[ArticleId, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "final_text": self.final_text,
            "cited_articles": [a.short for a in self.cited_articles],
            "ungrounded": [a.short for a in self.ungrounded],
            "retrieval_queries": list(self.retrieval_queries),
            "retrieved": [a.short for a in self.retrieved],
            "delivered": [a.short for a in self.delivered],
            "transcript": self.transcript.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)


def get_tools() -> list[ToolSpec]:
    return [
        ToolSpec(
            name=RETRIEVER_TOOL,
            description=(
                "Search the articles of the legal act. Pass a short, general query "
                "describing the legal concept (e.g. 'Incapacitation'); returns the "
                "best matching articles with their IDs."
            ),
            input_schema={
                "type": "object",
                "properties": {
                    "query": {"type": "string", "description": "Retrieval query"},
                },
                "required": ["query"],
            },
        )
    ]


def fit_context(docs: Sequence[ScoredDocument], budget: int) -> list[ScoredDocument]:
    """Longest prefix of docs whose approx_token_len sum stays within budget."""
    fitted: list[ScoredDocument] = []
    used = 0
    for doc in docs:
        cost = doc.article.approx_token_len
        if used + cost > budget:
            break
        fitted.append(doc)
        used += cost
    return fitted


def format_tool_response(docs: Sequence[ScoredDocument]) -> str:
    """Ranked «Art. id» blocks, separated by blank lines."""
    if not docs:
        return NO_MATCHES
    return "\n\n".join(f"«{doc.article.id}» {doc.article.text}" for doc in docs)


class _ContextLedger:
    """Tracks what has been shown to the model across tool calls."""

    def __init__(self, budget: int):
        self.budget = budget
        self.used = 0
        self.retrieved: dict[ArticleId, None] = {}
        self.delivered: dict[ArticleId, None] = {}

    def admit(self, docs: Sequence[ScoredDocument]) -> str:
        self.retrieved.update((d.article.id, None) for d in docs)
        if not docs:
            return NO_MATCHES
        fresh = [d for d in docs if d.article.id not in self.delivered]
        if not fresh:
            return ALREADY_PROVIDED

        remaining = self.budget - self.used
        fitted = fit_context(fresh, remaining)
        # Headers and separators count too.
        while fitted and approx_tokens(format_tool_response(fitted)) > remaining:
            fitted.pop()
        if not fitted:
            if not self.delivered:
                raise BudgetExhausted(
                    f"{fresh[0].article.id} ({fresh[0].article.approx_token_len} tokens) "
                    f"does not fit the context budget of {self.budget} tokens"
                )
            return BUDGET_FULL
        response = format_tool_response(fitted)
        self.used += approx_tokens(response)
        self.delivered.update((d.article.id, None) for d in fitted)
        return response


async def _call_tool(
    message: ChatMessage,
    retriever: Retriever,
    config: AgentConfig,
    ledger: _ContextLedger,
    queries: list[str],
) -> str:
    call = message.tool_call
    assert call is not None
    if call.tool_name != RETRIEVER_TOOL:
        logger.warning(f"Model called unknown tool {call.tool_name!r}")
        return f"Unknown tool {call.tool_name!r}. The only available tool is {RETRIEVER_TOOL!r}."

    query = call.arguments.get("query")
    if not isinstance(query, str) or not query.strip():
        return "The retriever tool requires a non-empty 'query' string."

    queries.append(query)
    try:
        docs = await retriever.search(query, config.k)
    except EmptyQuery:
        return "The query is empty after normalization."
    logger.info(f"Retrieved {len(docs)} article(s) for {query!r}")
    return ledger.admit(docs)


async def run_agent(
    question: str,
    index_or_retriever: Index | Retriever,
    model: ModelClient,
    config: Optional[AgentConfig] = None,
    fused_map: Optional[Mapping[str, ArticleId]] = None,
) -> AgentAnswer:
    """Answer question with the retriever tool.

    Raises:
        ModelUnavailable: the model failed.
        BudgetExhausted: the first retrieval returned articles and not even
            the best one fits the context budget.
        ConfigError: config is out of range for the index.
    """
    config = config or AgentConfig()
    retriever = (
        PositionalRetriever(index_or_retriever)
        if isinstance(index_or_retriever, Index)
        else index_or_retriever
    )
    config.validate(retriever.index)
    if fused_map is None:
        fused_map = fused_superscript_map(e.article.id for e in retriever.index.entries)

    tools = get_tools()
    transcript = AgentTranscript(
        messages=[ChatMessage.system(config.system_prompt), ChatMessage.user(question)]
    )
    ledger = _ContextLedger(config.context_budget_tokens)
    queries: list[str] = []

    final: Optional[ChatMessage] = None
    while transcript.tool_call_count < config.max_tool_calls:
        reply = await model.chat(transcript.messages, tools, config.temperature)
        transcript.messages.append(reply)
        if reply.tool_call is None:
            final = reply
            break
        transcript.tool_call_count += 1
        content = await _call_tool(reply, retriever, config, ledger, queries)
        transcript.messages.append(ChatMessage.tool(content, reply.tool_call.id))

    if final is None:
        logger.info(f"Tool-call limit {config.max_tool_calls} reached, forcing a final answer")
        transcript.messages.append(ChatMessage.user(FORCE_FINAL_PROMPT))
        final = await model.chat(transcript.messages, None, config.temperature)
        transcript.messages.append(final)

    cited = cited_articles(final.content, fused_map)
    retrieved = tuple(ledger.retrieved)
    ungrounded = tuple(a for a in cited if a not in ledger.retrieved)
    if ungrounded:
        logger.info(f"Ungrounded citation(s): {', '.join(str(a) for a in ungrounded)}")
    return AgentAnswer(
        final_text=final.content,
        cited_articles=cited,
        transcript=transcript,
        retrieval_queries=queries,
        retrieved=retrieved,
        delivered=tuple(ledger.delivered),
        ungrounded=ungrounded,
    )

