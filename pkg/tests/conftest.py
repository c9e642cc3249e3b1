"""
Shared fixtures: checked-in mini acts, the exam dataset and mock model scripts.
"""

from pathlib import Path

import pytest

from src.corpus import normalize_source, parse_act
from src.search import Index, build_index
from src.types import Article, ArticleId, LegalAct

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def make_act(texts: list[str]) -> LegalAct:
    """Act whose articles are numbered 1..n with the given texts."""
    return LegalAct(
        title="test",
        articles=tuple(Article(ArticleId(i + 1), text) for i, text in enumerate(texts)),
    )


@pytest.fixture
def civil_act() -> LegalAct:
    raw = fixture_path("mini_civil.txt").read_text(encoding="utf-8")
    return parse_act(normalize_source(raw))


@pytest.fixture
def civil_index(civil_act: LegalAct) -> Index:
    return build_index(civil_act)


@pytest.fixture
def civil_corpus(tmp_path: Path, civil_act: LegalAct) -> Path:
    from src.storage import save_corpus

    return save_corpus(civil_act, tmp_path / "civil.corpus.json")
