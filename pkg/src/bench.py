"""
Naive vs bit-parallel scorer benchmark.
"""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .errors import EmptyQuery
from .scoring import CompiledQuery, normalize_text, score_document_naive
from .search import Index
from .types import Article, ArticleId, LegalAct

logger = logging.getLogger(__name__)

_WORDS = (
    "osoba", "fizyczna", "prawna", "umowa", "zobowiązanie", "wierzyciel", "dłużnik",
    "świadczenie", "szkoda", "odpowiedzialność", "pełnomocnictwo", "prokura",
    "przedsiębiorca", "własność", "rzecz", "posiadanie", "spadek", "termin",
    "przedawnienie", "ubezwłasnowolnienie", "zdolność", "czynność", "sąd",
    "nieważna", "oświadczenie", "woli", "może", "nie", "jest", "w", "z", "do",
    "na", "przez", "jeżeli", "ustawa", "stanowi", "inaczej", "osób", "trzecich",
)


def synthetic_act(size_kb: int = 500, seed: int = 0, words_per_article: int = 60) -> LegalAct:
    """Deterministic act of roughly size_kb kilobytes of article text."""
    rng = random.Random(seed)
    target = size_kb * 1024
    articles: list[Article] = []
    total = 0
    while total < target:
        number = len(articles) + 1
        body = " ".join(rng.choice(_WORDS) for _ in range(words_per_article))
        text = f"Art. {number}. § 1. {body.capitalize()}."
        articles.append(Article(ArticleId(number), text))
        total += len(text.encode("utf-8"))
    return LegalAct(title="Synthetic act", articles=tuple(articles))


def synthetic_queries(act: LegalAct, n: int = 3, length: int = 64, seed: int = 0) -> list[str]:
    """Article excerpts of the given length with a few characters changed."""
    rng = random.Random(seed)
    queries = []
    candidates = [a for a in act.articles if len(normalize_text(a.text)) >= length] or list(act.articles)
    for _ in range(n):
        text = normalize_text(rng.choice(candidates).text).chars
        start = rng.randrange(max(1, len(text) - length + 1))
        chars = list(text[start : start + length])
        for _ in range(max(1, len(chars) // 16)):
            chars[rng.randrange(len(chars))] = rng.choice("abcdeąęółżź")
        queries.append("".join(chars))
    return queries


def load_queries(path: str | Path) -> list[str]:
    """One query per line; lines that normalize to nothing are skipped.

    Raises:
        EmptyQuery: the file holds no usable query.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    queries = [line.strip() for line in lines if normalize_text(line).chars]
    if not queries:
        raise EmptyQuery(f"no queries in {path}")
    return queries


@dataclass(frozen=True)
class BenchResult:
    corpus_bytes: int
    n_articles: int
    n_queries: int
    naive_seconds: float
    fast_seconds: float
    mismatches: int

    def _mb_per_s(self, seconds: float) -> float:
        scanned = self.corpus_bytes * self.n_queries / 1_000_000
        return scanned / seconds if seconds > 0 else float("inf")

    @property
    def naive_mb_per_s(self) -> float:
        return self._mb_per_s(self.naive_seconds)

    @property
    def fast_mb_per_s(self) -> float:
        return self._mb_per_s(self.fast_seconds)

    @property
    def speedup(self) -> float:
        return self.naive_seconds / self.fast_seconds if self.fast_seconds > 0 else float("inf")

    def summary(self) -> str:
        return (
            f"corpus: {self.n_articles} article(s), {self.corpus_bytes / 1024:.0f} KB; "
            f"queries: {self.n_queries}\n"
            f"naive: {self.naive_seconds:.3f} s ({self.naive_mb_per_s:.2f} MB/s)\n"
            f"fast:  {self.fast_seconds:.3f} s ({self.fast_mb_per_s:.2f} MB/s)\n"
            f"speedup: {self.speedup:.1f}x, mismatches: {self.mismatches}"
        )


def run_bench(index: Index, queries: Sequence[str]) -> BenchResult:
    """Score every article against every query with both scorers.

    Fast results are compared with naive ones; disagreements are counted.
    """
    fast_scores = []
    fast_seconds = 0.0
    for query in queries:
        started = time.perf_counter()
        compiled = CompiledQuery.compile(normalize_text(query))
        fast_scores.append([compiled.score(e.normalized, codes=e.codes) for e in index.entries])
        fast_seconds += time.perf_counter() - started

    mismatches = 0
    naive_seconds = 0.0
    for query, expected in zip(queries, fast_scores):
        normalized = normalize_text(query)
        started = time.perf_counter()
        naive = [score_document_naive(e.normalized, normalized) for e in index.entries]
        naive_seconds += time.perf_counter() - started
        mismatches += sum(a != b for a, b in zip(naive, expected))

    if mismatches:
        logger.error(f"{mismatches} fast/naive score mismatch(es)")
    return BenchResult(
        corpus_bytes=sum(len(e.normalized.chars.encode("utf-8")) for e in index.entries),
        n_articles=len(index),
        n_queries=len(queries),
        naive_seconds=naive_seconds,
        fast_seconds=fast_seconds,
        mismatches=mismatches,
    )
