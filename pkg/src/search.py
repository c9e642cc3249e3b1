"""
In-memory retrieval over the articles of an act.

The positional backend scores every article with the bit-parallel scorer and
keeps the top k. The vector backend (see vectors.py) ranks by cosine
similarity. Both return ScoredDocument lists sorted by descending score,
ties broken by corpus position.
"""

from __future__ import annotations

import asyncio
import heapq
import logging
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Protocol, Sequence

import numpy as np

from .errors import EmptyCorpus, EmptyQuery
from .scoring import CompiledQuery, NormalizedText, normalize_text, text_codes
from .types import Article, ArticleId, LegalAct, Score, ScoredDocument

logger = logging.getLogger(__name__)

DEFAULT_K = 50


class Backend(str, Enum):
    POSITIONAL = "positional"
    VECTOR = "vector"


@dataclass(frozen=True)
class IndexEntry:
    """An article with its normalized text and code points, computed once."""

    article: Article
    position: int
    normalized: NormalizedText = field(repr=False)
    codes: np.ndarray = field(repr=False, compare=False)


@dataclass(frozen=True)
class Index:
    """Immutable index; entries are in corpus order.

    vectors is set for the vector backend: one unit-normalized row per entry.
    """

    entries: tuple[IndexEntry, ...]
    backend: Backend = Backend.POSITIONAL
    vectors: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def articles(self) -> list[Article]:
        return [e.article for e in self.entries]

    def entry_for(self, article_id: ArticleId) -> Optional[IndexEntry]:
        for entry in self.entries:
            if entry.article.id == article_id:
                return entry
        return None


def make_entry(article: Article, position: int) -> IndexEntry:
    normalized = normalize_text(article.text)
    codes = text_codes(normalized)
    codes.flags.writeable = False
    return IndexEntry(article=article, position=position, normalized=normalized, codes=codes)


def build_index(act: LegalAct) -> Index:
    """Precompute normalized text for every article of the act.

    Raises:
        EmptyCorpus: the act has no articles.
    """
    if not act.articles:
        raise EmptyCorpus()
    entries = tuple(make_entry(a, i) for i, a in enumerate(act.articles))
    logger.info(f"Indexed {len(entries)} article(s)")
    return Index(entries=entries)


def rank(scored: Sequence[tuple[float, int, Score | float]], index: Index, k: int) -> list[ScoredDocument]:
    """Top k of (value, slot, score) triples as ScoredDocuments.

    slot indexes index.entries. Higher value first; equal values keep corpus
    order. Documents carry the corpus position of their entry.
    """
    top = heapq.nsmallest(k, scored, key=lambda t: (-t[0], t[1]))
    return [
        ScoredDocument(
            article=index.entries[slot].article,
            score=score,
            rank=r,
            position=index.entries[slot].position,
        )
        for r, (_, slot, score) in enumerate(top, start=1)
    ]


def _score_slice(
    compiled: CompiledQuery, entries: Sequence[IndexEntry], strict: bool
) -> list[tuple[float, int, Score]]:
    results = []
    for entry in entries:
        score = compiled.score(entry.normalized, codes=entry.codes, strict=strict)
        results.append((score.value, entry.position, score))
    return results


def retrieve(
    index: Index,
    query: str,
    k: int = DEFAULT_K,
    *,
    strict: bool = False,
    workers: int = 1,
) -> list[ScoredDocument]:
    """Top-k articles for query under positional matching.

    With workers > 1 the corpus is split into contiguous slices scored in a
    thread pool; the merge is the same as for one worker.

    Raises:
        EmptyQuery: query is empty after normalization.
        ValueError: k < 1.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    normalized = normalize_text(query)
    if not normalized.chars:
        raise EmptyQuery()
    compiled = CompiledQuery.compile(normalized)

    entries = index.entries
    if workers > 1 and len(entries) > workers:
        step = -(-len(entries) // workers)
        slices = [entries[i : i + step] for i in range(0, len(entries), step)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(lambda s: _score_slice(compiled, s, strict), slices)
            scored = [item for part in parts for item in part]
    else:
        scored = _score_slice(compiled, entries, strict)

    results = rank(scored, index, k)
    logger.debug(f"retrieve({query!r}, k={k}) -> {len(results)} hit(s)")
    return results


def _flat(s: str) -> str:
    return " ".join(s.split())


def excerpt(index: Index, doc: ScoredDocument, query_len: int, context: int = 30) -> str:
    """Best-matching window of a positional hit, highlighted as [...].

    context characters of surrounding text are kept on each side.
    """
    if not isinstance(doc.score, Score):
        return _flat(doc.article.text)[: 2 * context + query_len]

    entry = index.entries[doc.position]
    normalized = entry.normalized
    if len(normalized) < query_len:
        start, end = 0, len(normalized)
    else:
        start, end = doc.score.best_offset, doc.score.best_offset + query_len
    src_start, src_end = normalized.origin_span(start, end)

    source = unicodedata.normalize("NFC", entry.article.text)
    before = source[max(0, src_start - context) : src_start]
    after = source[src_end : src_end + context]
    prefix = "..." if src_start > context else ""
    suffix = "..." if src_end + context < len(source) else ""
    return f"{prefix}{_flat(before)} [{_flat(source[src_start:src_end])}] {_flat(after)}{suffix}".strip()


class Retriever(Protocol):
    """What the agent calls when the model asks for articles."""

    index: Index

    async def search(self, query: str, k: int) -> list[ScoredDocument]: ...


class PositionalRetriever:
    """Positional-match retrieval, run off the event loop."""

    def __init__(self, index: Index, strict: bool = False, workers: int = 1):
        self.index = index
        self.strict = strict
        self.workers = workers

    async def search(self, query: str, k: int) -> list[ScoredDocument]:
        return await asyncio.to_thread(
            retrieve, self.index, query, k, strict=self.strict, workers=self.workers
        )
