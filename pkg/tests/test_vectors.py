"""
Tests for the vector backend and the embedding client.
"""

import json
import math
from pathlib import Path

import httpx
import pytest

from src.config import RetryPolicy
from src.errors import (
    DimensionMismatch,
    DuplicateArticle,
    ModelUnavailable,
    SchemaError,
    UnknownArticleId,
    ZeroVector,
)
from src.types import ArticleId, LegalAct
from src.vectors import (
    EmbeddingClient,
    VectorRecord,
    VectorRetriever,
    build_vector_index,
    embed_corpus,
    load_vectors,
    retrieve_vector,
    save_vectors,
)

from .conftest import make_act

NO_WAIT = RetryPolicy(initial_interval=0, maximum_interval=0, maximum_attempts=2)


def write_jsonl(path: Path, records: list[dict]) -> Path:
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def three_articles() -> LegalAct:
    return make_act(["pierwszy", "drugi", "trzeci"])


@pytest.fixture
def angled_records() -> list[VectorRecord]:
    # 90, 0 and 60 degrees from the query (1, 0)
    return [
        VectorRecord(ArticleId(1), (0.0, 3.0)),
        VectorRecord(ArticleId(2), (2.0, 0.0)),
        VectorRecord(ArticleId(3), (0.5, math.sqrt(3) / 2)),
    ]


class TestLoadVectors:
    def test_load(self, tmp_path: Path) -> None:
        path = write_jsonl(
            tmp_path / "v.jsonl",
            [{"article_id": "Art. 1", "vector": [1, 0]}, {"article_id": "109^1", "vector": [0, 1]}],
        )

        records = load_vectors(path)

        assert records == [
            VectorRecord(ArticleId(1), (1.0, 0.0)),
            VectorRecord(ArticleId(109, 1), (0.0, 1.0)),
        ]

    def test_mixed_dimensions(self, tmp_path: Path) -> None:
        path = write_jsonl(
            tmp_path / "v.jsonl",
            [{"article_id": "1", "vector": [1, 0]}, {"article_id": "2", "vector": [1, 0, 0]}],
        )
        with pytest.raises(DimensionMismatch):
            load_vectors(path)

    def test_zero_vector(self, tmp_path: Path) -> None:
        path = write_jsonl(tmp_path / "v.jsonl", [{"article_id": "1", "vector": [0, 0]}])
        with pytest.raises(ZeroVector):
            load_vectors(path)

    def test_bad_line(self, tmp_path: Path) -> None:
        path = tmp_path / "v.jsonl"
        path.write_text('{"article_id": "1", "vector": [1]}\n{"vector": [1]}\n', encoding="utf-8")

        with pytest.raises(SchemaError) as exc:
            load_vectors(path)
        assert exc.value.line == 2

    def test_duplicate_article(self, tmp_path: Path) -> None:
        path = write_jsonl(
            tmp_path / "v.jsonl",
            [{"article_id": "Art. 2", "vector": [1, 0]}, {"article_id": "2", "vector": [0, 1]}],
        )

        with pytest.raises(DuplicateArticle) as exc:
            load_vectors(path)
        assert exc.value.line_no == 2

    def test_save_then_load(self, tmp_path: Path, angled_records: list[VectorRecord]) -> None:
        path = save_vectors(angled_records, tmp_path / "out" / "v.jsonl")
        assert load_vectors(path) == angled_records


class TestRetrieveVector:
    def test_cosine_ranking(self, three_articles: LegalAct, angled_records: list[VectorRecord]) -> None:
        index = build_vector_index(three_articles, angled_records)

        results = retrieve_vector(index, [1.0, 0.0], k=3)

        assert [r.article.id.short for r in results] == ["2", "3", "1"]
        assert [round(r.value, 9) for r in results] == [1.0, 0.5, 0.0]

    def test_identical_vector_first(self, three_articles: LegalAct, angled_records: list[VectorRecord]) -> None:
        index = build_vector_index(three_articles, angled_records)

        results = retrieve_vector(index, [0.5, math.sqrt(3) / 2], k=1)

        assert results[0].article.id == ArticleId(3)
        assert results[0].value == pytest.approx(1.0)

    def test_ties_keep_corpus_order(self, three_articles: LegalAct) -> None:
        records = [VectorRecord(ArticleId(i), (1.0, 1.0)) for i in (1, 2, 3)]
        index = build_vector_index(three_articles, records)

        assert [r.position for r in retrieve_vector(index, [1, 1], k=3)] == [0, 1, 2]

    def test_dimension_mismatch(self, three_articles: LegalAct, angled_records: list[VectorRecord]) -> None:
        index = build_vector_index(three_articles, angled_records)
        with pytest.raises(DimensionMismatch):
            retrieve_vector(index, [1.0, 0.0, 0.0], k=1)

    def test_zero_query(self, three_articles: LegalAct, angled_records: list[VectorRecord]) -> None:
        index = build_vector_index(three_articles, angled_records)
        with pytest.raises(ZeroVector):
            retrieve_vector(index, [0.0, 0.0], k=1)

    def test_unknown_article(self, three_articles: LegalAct) -> None:
        with pytest.raises(UnknownArticleId):
            build_vector_index(three_articles, [VectorRecord(ArticleId(99), (1.0,))])

    def test_missing_vectors_are_skipped(self, three_articles: LegalAct) -> None:
        index = build_vector_index(three_articles, [VectorRecord(ArticleId(2), (1.0, 0.0))])

        assert [e.article.id for e in index.entries] == [ArticleId(2)]
        assert index.vectors is not None
        assert not index.vectors.flags.writeable

    def test_duplicate_records_rejected(self, three_articles: LegalAct) -> None:
        records = [VectorRecord(ArticleId(2), (1.0, 0.0)), VectorRecord(ArticleId(2), (0.0, 1.0))]

        with pytest.raises(DuplicateArticle):
            build_vector_index(three_articles, records)

    def test_position_is_corpus_position(self, three_articles: LegalAct) -> None:
        records = [VectorRecord(ArticleId(1), (0.0, 1.0)), VectorRecord(ArticleId(3), (1.0, 0.0))]
        index = build_vector_index(three_articles, records)

        results = retrieve_vector(index, [1.0, 0.0], k=2)

        assert [(r.article.id.base, r.position) for r in results] == [(3, 2), (1, 0)]
        assert results[0].to_dict()["position"] == 2


def embedding_transport(calls: list[dict], fail_first: int = 0) -> httpx.MockTransport:
    def handler(request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        calls.append(body)
        if len(calls) <= fail_first:
            return httpx.Response(503)
        return httpx.Response(200, json={"vectors": [[float(len(t)), 1.0] for t in body["texts"]]})

    return httpx.MockTransport(handler)


class TestEmbeddingClient:
    async def test_embed_corpus_in_batches(self, three_articles: LegalAct) -> None:
        calls: list[dict] = []
        client = EmbeddingClient("https://embed.test/v1", transport=embedding_transport(calls), retry=NO_WAIT)

        records = await embed_corpus(three_articles, client, batch_size=2)
        await client.aclose()

        assert [len(c["texts"]) for c in calls] == [2, 1]
        assert records[0] == VectorRecord(ArticleId(1), (8.0, 1.0))

    async def test_retries_transient_errors(self) -> None:
        calls: list[dict] = []
        client = EmbeddingClient("https://embed.test/v1", transport=embedding_transport(calls, 1), retry=NO_WAIT)

        vectors = await client.embed(["abc"])

        assert vectors == [[3.0, 1.0]]
        assert len(calls) == 2

    async def test_gives_up(self) -> None:
        calls: list[dict] = []
        client = EmbeddingClient("https://embed.test/v1", transport=embedding_transport(calls, 5), retry=NO_WAIT)

        with pytest.raises(ModelUnavailable):
            await client.embed(["abc"])
        assert len(calls) == 2

    async def test_wrong_shape(self) -> None:
        transport = httpx.MockTransport(lambda r: httpx.Response(200, json={"vectors": []}))
        client = EmbeddingClient("https://embed.test/v1", transport=transport, retry=NO_WAIT)

        with pytest.raises(ModelUnavailable):
            await client.embed(["abc"])

    async def test_vector_retriever(self, three_articles: LegalAct) -> None:
        records = [
            VectorRecord(ArticleId(1), (8.0, 1.0)),
            VectorRecord(ArticleId(2), (5.0, 1.0)),
            VectorRecord(ArticleId(3), (6.0, 1.0)),
        ]
        index = build_vector_index(three_articles, records)
        client = EmbeddingClient("https://embed.test/v1", transport=embedding_transport([]), retry=NO_WAIT)

        results = await VectorRetriever(index, client).search("pięć", 1)

        assert results[0].article.id == ArticleId(2)
