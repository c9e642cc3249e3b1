"""
Tests for corpus file storage.
"""

import json
from pathlib import Path

import pytest

from src.errors import CorpusSchemaError, EmptyCorpus
from src.storage import SCHEMA_VERSION, load_corpus, save_corpus, validate_act
from src.types import Article, ArticleId, LegalAct, StructuralUnit, UnitKind


def test_save_and_load(tmp_path: Path, civil_act: LegalAct) -> None:
    path = save_corpus(civil_act, tmp_path / "out" / "corpus.json")

    assert path.exists()
    assert load_corpus(path) == civil_act


def test_file_layout(tmp_path: Path, civil_act: LegalAct) -> None:
    path = save_corpus(civil_act, tmp_path / "corpus.json")
    data = json.loads(path.read_text(encoding="utf-8"))

    assert data["schema_version"] == SCHEMA_VERSION
    first = data["articles"][0]
    assert first["id"] == "Art. 1"
    assert first["char_len"] == len(first["text"])
    assert first["path"] == ["KSIĘGA PIERWSZA", "TYTUŁ I"]
    assert "Ę" in path.read_text(encoding="utf-8")


def test_missing_file(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path / "nope.json")


def test_not_json(tmp_path: Path) -> None:
    path = tmp_path / "bad.json"
    path.write_text("{not json", encoding="utf-8")

    with pytest.raises(CorpusSchemaError):
        load_corpus(path)


def test_version_mismatch(tmp_path: Path, civil_act: LegalAct) -> None:
    path = save_corpus(civil_act, tmp_path / "corpus.json")
    data = json.loads(path.read_text(encoding="utf-8"))
    data["schema_version"] = SCHEMA_VERSION + 1
    path.write_text(json.dumps(data), encoding="utf-8")

    with pytest.raises(CorpusSchemaError, match="schema_version"):
        load_corpus(path)


def test_tampered_text(tmp_path: Path, civil_act: LegalAct) -> None:
    path = save_corpus(civil_act, tmp_path / "corpus.json")
    data = json.loads(path.read_text(encoding="utf-8"))
    data["articles"][0]["text"] += " dopisek"
    path.write_text(json.dumps(data), encoding="utf-8")

    with pytest.raises(CorpusSchemaError, match="char_len"):
        load_corpus(path)


def test_bad_article_id(tmp_path: Path, civil_act: LegalAct) -> None:
    path = save_corpus(civil_act, tmp_path / "corpus.json")
    data = json.loads(path.read_text(encoding="utf-8"))
    data["articles"][0]["id"] = "Paragraph 1"
    path.write_text(json.dumps(data), encoding="utf-8")

    with pytest.raises(CorpusSchemaError):
        load_corpus(path)


class TestValidateAct:
    def test_empty(self) -> None:
        with pytest.raises(EmptyCorpus):
            validate_act(LegalAct(title=""))

    def test_duplicate_ids(self) -> None:
        act = LegalAct("", articles=(Article(ArticleId(1), "a"), Article(ArticleId(1), "b")))
        with pytest.raises(CorpusSchemaError, match="unique"):
            validate_act(act)

    def test_span_out_of_range(self) -> None:
        act = LegalAct(
            "",
            units=(StructuralUnit(UnitKind.CHAPTER, "ROZDZIAŁ 1", 0, 5),),
            articles=(Article(ArticleId(1), "a"),),
        )
        with pytest.raises(CorpusSchemaError, match="out of range"):
            validate_act(act)

    def test_save_refuses_invalid(self, tmp_path: Path) -> None:
        with pytest.raises(EmptyCorpus):
            save_corpus(LegalAct(title="x"), tmp_path / "c.json")
        assert not (tmp_path / "c.json").exists()
