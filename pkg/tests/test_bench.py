"""
Tests for the synthetic corpus and the scorer benchmark.
"""

from pathlib import Path

import pytest

from src.bench import BenchResult, load_queries, run_bench, synthetic_act, synthetic_queries
from src.errors import EmptyQuery
from src.search import build_index


class TestSyntheticCorpus:
    def test_size_and_numbering(self) -> None:
        act = synthetic_act(size_kb=16, seed=3)

        total = sum(len(a.text.encode("utf-8")) for a in act.articles)
        assert total >= 16 * 1024
        assert [a.id.base for a in act.articles] == list(range(1, len(act.articles) + 1))
        assert act.articles[0].text.startswith("Art. 1. § 1. ")

    def test_deterministic(self) -> None:
        assert synthetic_act(size_kb=4, seed=1) == synthetic_act(size_kb=4, seed=1)
        assert synthetic_act(size_kb=4, seed=1) != synthetic_act(size_kb=4, seed=2)

    def test_queries(self) -> None:
        act = synthetic_act(size_kb=4, seed=1)

        queries = synthetic_queries(act, n=5, length=32, seed=1)

        assert len(queries) == 5
        assert all(len(q) == 32 for q in queries)
        assert queries == synthetic_queries(act, n=5, length=32, seed=1)


class TestLoadQueries:
    def test_one_per_line(self, tmp_path: Path) -> None:
        path = tmp_path / "q.txt"
        path.write_text(" prokura \n\n \t \numowa zlecenia\n", encoding="utf-8")

        assert load_queries(path) == ["prokura", "umowa zlecenia"]

    def test_no_usable_query(self, tmp_path: Path) -> None:
        path = tmp_path / "q.txt"
        path.write_text("\n  \n", encoding="utf-8")

        with pytest.raises(EmptyQuery):
            load_queries(path)

class TestRunBench:
    def test_no_mismatches(self) -> None:
        act = synthetic_act(size_kb=8, seed=2)

        result = run_bench(build_index(act), synthetic_queries(act, n=2, length=24, seed=2))

        assert result.mismatches == 0
        assert result.n_articles == len(act.articles)
        assert result.n_queries == 2

    def test_summary(self) -> None:
        result = BenchResult(
            corpus_bytes=1_000_000, n_articles=10, n_queries=2, naive_seconds=4.0, fast_seconds=0.5, mismatches=0
        )

        assert result.speedup == 8.0
        assert result.naive_mb_per_s == 0.5
        assert result.fast_mb_per_s == 4.0
        assert "speedup: 8.0x, mismatches: 0" in result.summary()
