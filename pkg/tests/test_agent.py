"""
Tests for the retriever-tool agent loop, driven by scripted models.
"""

import pytest

from src.agent import (
    ALREADY_PROVIDED,
    BUDGET_FULL,
    FORCE_FINAL_PROMPT,
    NO_MATCHES,
    AgentConfig,
    fit_context,
    format_tool_response,
    get_tools,
    run_agent,
)
from src.errors import BudgetExhausted, ConfigError, ModelUnavailable
from src.model import ScriptedModel
from src.search import Index, build_index
from src.types import Article, ArticleId, Role, Score, ScoredDocument, approx_tokens

from .conftest import fixture_path, make_act


def search_step(query: str, name: str = "retriever") -> dict:
    return {"tool_call": {"name": name, "arguments": {"query": query}}}


def scored(article: Article, rank: int) -> ScoredDocument:
    return ScoredDocument(article=article, score=Score(0, 0), rank=rank, position=rank - 1)


class StubRetriever:
    """Returns fixed documents regardless of the query."""

    def __init__(self, index: Index, docs: list[ScoredDocument]):
        self.index = index
        self.docs = docs

    async def search(self, query: str, k: int) -> list[ScoredDocument]:
        return self.docs[:k]


class TestFitContext:
    def test_greedy_prefix(self) -> None:
        docs = [scored(Article(ArticleId(i + 1), "x" * 560), i + 1) for i in range(50)]

        assert len(fit_context(docs, 4200)) == 30

    def test_stops_at_first_overflow(self) -> None:
        docs = [
            scored(Article(ArticleId(1), "x" * 40), 1),
            scored(Article(ArticleId(2), "x" * 400), 2),
            scored(Article(ArticleId(3), "x" * 4), 3),
        ]

        assert [d.article.id.base for d in fit_context(docs, 50)] == [1]

    def test_format(self) -> None:
        docs = [scored(Article(ArticleId(109, 1), "Art. 109¹. Prokura."), 1), scored(Article(ArticleId(8), "Art. 8."), 2)]

        assert format_tool_response(docs) == "«Art. 109^1» Art. 109¹. Prokura.\n\n«Art. 8» Art. 8."
        assert format_tool_response([]) == NO_MATCHES


class TestAgentConfig:
    def test_budget_must_exceed_largest_article(self, civil_index: Index) -> None:
        with pytest.raises(ConfigError):
            AgentConfig(context_budget_tokens=10).validate(civil_index)

    @pytest.mark.parametrize("field, value", [("max_tool_calls", 0), ("k", 0)])
    def test_ranges(self, field: str, value: int) -> None:
        with pytest.raises(ConfigError):
            AgentConfig(**{field: value}).validate()

    def test_tool_schema(self) -> None:
        (tool,) = get_tools()

        assert tool.name == "retriever"
        assert tool.input_schema["required"] == ["query"]


class TestRunAgent:
    async def test_reformulated_query(self, civil_index: Index) -> None:
        model = ScriptedModel.from_file(fixture_path("ask_script.json"))

        answer = await run_agent("Kto może zostać ubezwłasnowolniony całkowicie?", civil_index, model)

        assert answer.retrieval_queries == ["Incapacitation"]
        assert answer.transcript.tool_call_count == 1
        assert answer.cited_articles == (ArticleId(13), ArticleId(16))
        assert answer.ungrounded == ()
        assert [m.role for m in answer.transcript.messages] == [
            Role.SYSTEM,
            Role.USER,
            Role.ASSISTANT,
            Role.TOOL,
            Role.ASSISTANT,
        ]

    async def test_tool_message_carries_ids(self, civil_index: Index) -> None:
        model = ScriptedModel.from_steps([search_step("prokura"), {"final": "c"}])

        answer = await run_agent("Czym jest prokura?", civil_index, model)

        tool_message = answer.transcript.messages[3]
        assert tool_message.tool_call_id == "call_0"
        assert "«Art. 109^1» Art. 109¹. § 1. Prokura" in tool_message.content

    async def test_answer_without_tool(self, civil_index: Index) -> None:
        model = ScriptedModel.from_steps([{"final": "Odpowiedź: a), art. 13 k.c."}])

        answer = await run_agent("Pytanie", civil_index, model)

        assert answer.retrieval_queries == []
        assert answer.transcript.tool_call_count == 0
        assert answer.retrieved == ()
        assert answer.ungrounded == (ArticleId(13),)

    async def test_tool_call_ceiling_forces_answer(self, civil_index: Index) -> None:
        model = ScriptedModel.from_steps(
            [search_step("prokura"), search_step("pełnomocnictwo"), search_step("przedsiębiorca"),
             search_step("jeszcze raz"), {"final": "Odpowiedź: c), art. 109^1 § 2 k.c."}]
        )

        answer = await run_agent("Czym jest prokura?", civil_index, model, AgentConfig(max_tool_calls=3))

        assert answer.transcript.tool_call_count == 3
        assert answer.retrieval_queries == ["prokura", "pełnomocnictwo", "przedsiębiorca"]
        assert answer.transcript.messages[-2].content == FORCE_FINAL_PROMPT
        assert answer.final_text.startswith("Odpowiedź: c)")
        assert answer.cited_articles == (ArticleId(109, 1),)

    async def test_articles_are_not_repeated(self, civil_index: Index) -> None:
        model = ScriptedModel.from_steps([search_step("prokura"), search_step("prokura"), {"final": "c"}])

        answer = await run_agent("Czym jest prokura?", civil_index, model)

        tool_messages = [m for m in answer.transcript.messages if m.role == Role.TOOL]
        assert tool_messages[1].content == ALREADY_PROVIDED
        assert len(answer.delivered) == len(civil_index)

    async def test_budget_is_cumulative(self) -> None:
        # 120 tokens each
        texts = [f"{word} " * 80 for word in ("umowa", "umowy", "umowę", "umową", "umowo")]
        index = build_index(make_act(texts))
        model = ScriptedModel.from_steps([search_step("umowa"), search_step("umowy"), {"final": "a"}])
        config = AgentConfig(context_budget_tokens=350, k=5)

        answer = await run_agent("Pytanie", index, model, config)

        tool_messages = [m for m in answer.transcript.messages if m.role == Role.TOOL]
        assert len(answer.delivered) == 2
        assert len(answer.retrieved) == 5
        assert tool_messages[1].content == BUDGET_FULL

    async def test_serialized_response_within_budget(self) -> None:
        index = build_index(make_act(["krótki"]))
        docs = [scored(Article(ArticleId(i + 1), "x" * 560), i + 1) for i in range(50)]
        model = ScriptedModel.from_steps([search_step("x"), search_step("y"), {"final": "a"}])

        answer = await run_agent("Pytanie", StubRetriever(index, docs), model, AgentConfig(context_budget_tokens=4200))

        tool_messages = [m for m in answer.transcript.messages if m.role == Role.TOOL]
        assert len(fit_context(docs, 4200)) == 30
        assert len(answer.delivered) == 29
        assert approx_tokens(tool_messages[0].content) <= 4200
        assert tool_messages[1].content == BUDGET_FULL

    async def test_grounding_with_small_k(self, civil_index: Index) -> None:
        model = ScriptedModel.from_steps(
            [search_step("prokury nie można ograniczyć"),
             {"final": "c) Article 1091 § 2, a także art. 415 k.c."}]
        )

        answer = await run_agent("Prokura", civil_index, model, AgentConfig(k=1))

        assert answer.retrieved == (ArticleId(109, 1),)
        assert answer.cited_articles == (ArticleId(109, 1), ArticleId(415))
        assert answer.ungrounded == (ArticleId(415),)

    async def test_unknown_tool_counts_toward_ceiling(self, civil_index: Index) -> None:
        model = ScriptedModel.from_steps([search_step("x", name="web_search"), {"final": "a"}])

        answer = await run_agent("Pytanie", civil_index, model)

        assert answer.transcript.tool_call_count == 1
        assert answer.transcript.messages[3].content.startswith("Unknown tool 'web_search'")
        assert answer.retrieval_queries == []

    async def test_budget_exhausted_on_first_retrieval(self) -> None:
        index = build_index(make_act(["krótki"]))
        huge = scored(Article(ArticleId(2), "x" * 40_000), 1)
        model = ScriptedModel.from_steps([search_step("x"), {"final": "a"}])

        with pytest.raises(BudgetExhausted):
            await run_agent("Pytanie", StubRetriever(index, [huge]), model, AgentConfig(context_budget_tokens=100))

    async def test_model_failure_propagates(self, civil_index: Index) -> None:
        model = ScriptedModel.from_steps([{"error": "timeout"}])

        with pytest.raises(ModelUnavailable):
            await run_agent("Pytanie", civil_index, model)

    async def test_deterministic_and_temperature_zero(self, civil_index: Index) -> None:
        path = fixture_path("ask_script.json")
        first_model, second_model = ScriptedModel.from_file(path), ScriptedModel.from_file(path)

        first = await run_agent("Kto może zostać ubezwłasnowolniony?", civil_index, first_model)
        second = await run_agent("Kto może zostać ubezwłasnowolniony?", civil_index, second_model)

        assert first.to_json() == second.to_json()
        assert first_model.temperatures == [0.0, 0.0]
