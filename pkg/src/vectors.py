"""
Embedding-baseline retrieval: cosine similarity over externally supplied vectors.

Vectors come from a JSONL file ({"article_id": "Art. 16", "vector": [...]}
per line) or from an embedding provider that answers POST {"texts": [...]}
with {"vectors": [[...], ...]}. The engine itself never computes embeddings.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import httpx
import numpy as np

from .config import EmbeddingSettings, RetryPolicy
from .errors import (
    ConfigError,
    DimensionMismatch,
    DuplicateArticle,
    EmptyCorpus,
    ModelUnavailable,
    SchemaError,
    UnknownArticleId,
    ZeroVector,
)
from .model import post_json
from .search import Backend, Index, make_entry, rank
from .types import ArticleId, LegalAct, ScoredDocument

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VectorRecord:
    """Embedding of one article."""

    article_id: ArticleId
    vector: tuple[float, ...]

    @property
    def dim(self) -> int:
        return len(self.vector)

    def to_dict(self) -> dict[str, Any]:
        return {"article_id": str(self.article_id), "vector": list(self.vector)}


def _unit(vector: Sequence[float] | np.ndarray) -> np.ndarray:
    arr = np.asarray(vector, dtype=np.float64)
    norm = np.linalg.norm(arr)
    if norm == 0 or not np.isfinite(norm):
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    return arr / norm


def load_vectors(path: str | Path) -> list[VectorRecord]:
    """Read a JSONL vector file.

    Raises:
        SchemaError: a line is not a {article_id, vector} record.
        DimensionMismatch: records of different dimensions.
        ZeroVector: a record is all zeros.
        DuplicateArticle: two records for the same article.
    """
    records: list[VectorRecord] = []
    seen: set[ArticleId] = set()
    dim: Optional[int] = None
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
            article_id = ArticleId.parse(str(data["article_id"]))
            vector = tuple(float(x) for x in data["vector"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise SchemaError(line_no, f"bad vector record: {e}") from e
        if not vector:
            raise SchemaError(line_no, "empty vector")
        if dim is None:
            dim = len(vector)
        elif len(vector) != dim:
            raise DimensionMismatch(dim, len(vector))
        if not any(vector):
            raise ZeroVector(f"line {line_no}: zero vector for {article_id}")
        if article_id in seen:
            raise DuplicateArticle(article_id, line_no)
        seen.add(article_id)
        records.append(VectorRecord(article_id, vector))
    return records


def save_vectors(records: Iterable[VectorRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(r.to_dict()) for r in records]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote {len(lines)} vector(s) to {path}")
    return path


def build_vector_index(act: LegalAct, records: Sequence[VectorRecord]) -> Index:
    """Index the articles that have a vector, with unit-normalized rows.

    Articles without a vector are left out with a warning.

    Raises:
        EmptyCorpus: the act has no articles, or none of them has a vector.
        UnknownArticleId: a record names an article not in the act.
        DuplicateArticle: two records name the same article.
        DimensionMismatch: records of different dimensions.
        ZeroVector: a record is all zeros.
    """
    if not act.articles:
        raise EmptyCorpus()
    known = set(act.article_ids())
    by_id: dict[ArticleId, VectorRecord] = {}
    for record in records:
        if record.article_id not in known:
            raise UnknownArticleId(record.article_id)
        if record.article_id in by_id:
            raise DuplicateArticle(record.article_id)
        by_id[record.article_id] = record

    dims = {r.dim for r in by_id.values()}
    if len(dims) > 1:
        first, *rest = sorted(dims)
        raise DimensionMismatch(first, rest[0])

    entries, rows = [], []
    for position, article in enumerate(act.articles):
        record = by_id.get(article.id)
        if record is None:
            logger.warning(f"{article.id} has no vector, left out of the vector index")
            continue
        entries.append(make_entry(article, position))
        rows.append(_unit(record.vector))
    if not entries:
        raise EmptyCorpus("no article of the corpus has a vector")

    matrix = np.vstack(rows)
    matrix.flags.writeable = False
    logger.info(f"Indexed {len(entries)} vector(s) of dimension {matrix.shape[1]}")
    return Index(entries=tuple(entries), backend=Backend.VECTOR, vectors=matrix)


def retrieve_vector(index: Index, query_vector: Sequence[float] | np.ndarray, k: int = 50) -> list[ScoredDocument]:
    """Top-k articles by cosine similarity to query_vector.

    Raises:
        DimensionMismatch: query_vector has another dimension than the index.
        ZeroVector: query_vector is all zeros.
        ValueError: k < 1 or the index has no vectors.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if index.vectors is None:
        raise ValueError("index was not built with vectors")
    query = np.asarray(query_vector, dtype=np.float64)
    if query.shape != (index.vectors.shape[1],):
        raise DimensionMismatch(index.vectors.shape[1], query.size)
    similarities = np.clip(index.vectors @ _unit(query), -1.0, 1.0)
    scored = [(float(s), i, float(s)) for i, s in enumerate(similarities)]
    return rank(scored, index, k)


class EmbeddingClient:
    """Client for an embedding provider: POST {"texts": [...]} -> {"vectors": [...]}."""

    def __init__(
        self,
        url: str,
        api_key: Optional[str] = None,
        timeout: float = 30.0,
        retry: Optional[RetryPolicy] = None,
        transport: Optional[httpx.AsyncBaseTransport] = None,
    ):
        self.url = url
        self.api_key = api_key
        self.retry = retry or RetryPolicy()
        self._client = httpx.AsyncClient(timeout=timeout, transport=transport)

    @classmethod
    def from_settings(
        cls, settings: EmbeddingSettings, transport: Optional[httpx.AsyncBaseTransport] = None
    ) -> "EmbeddingClient":
        if not settings.url:
            raise ConfigError("no embedding provider URL configured (embedding.url)")
        return cls(
            url=settings.url,
            api_key=settings.api_key(),
            timeout=settings.timeout,
            retry=settings.retry,
            transport=transport,
        )

    async def embed(self, texts: Sequence[str]) -> list[list[float]]:
        """Embed texts, one vector per text in order.

        Raises:
            ModelUnavailable: provider failure or a reply of the wrong shape.
        """
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else None
        data = await post_json(
            self._client, self.url, {"texts": list(texts)}, headers=headers, retry=self.retry
        )
        vectors = data.get("vectors") if isinstance(data, dict) else None
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ModelUnavailable(f"embedding provider returned a malformed payload for {len(texts)} text(s)")
        try:
            return [[float(x) for x in v] for v in vectors]
        except (TypeError, ValueError) as e:
            raise ModelUnavailable(f"embedding provider returned non-numeric vectors: {e}") from e

    async def aclose(self) -> None:
        await self._client.aclose()


async def embed_corpus(act: LegalAct, client: EmbeddingClient, batch_size: int = 32) -> list[VectorRecord]:
    """Embed every article of the act in batches."""
    records: list[VectorRecord] = []
    articles = list(act.articles)
    for start in range(0, len(articles), batch_size):
        batch = articles[start : start + batch_size]
        vectors = await client.embed([a.text for a in batch])
        records.extend(VectorRecord(a.id, tuple(v)) for a, v in zip(batch, vectors))
        logger.info(f"Embedded {len(records)}/{len(articles)} article(s)")
    return records


class VectorRetriever:
    """Embeds each query through the provider, then ranks by cosine similarity."""

    def __init__(self, index: Index, embedder: EmbeddingClient):
        self.index = index
        self.embedder = embedder

    async def search(self, query: str, k: int) -> list[ScoredDocument]:
        (vector,) = await self.embedder.embed([query])
        return retrieve_vector(self.index, vector, k)
