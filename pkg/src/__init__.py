"""
statute-search - article retrieval and retrieval-augmented question answering
over statute law.
"""

from .agent import AgentAnswer, AgentConfig, fit_context, run_agent
from .corpus import canonical_article_id, normalize_source, parse_act
from .evaluation import aggregate, extract_structured, load_dataset, run_eval, score_item
from .scoring import normalize_text, score_document_fast, score_document_naive, score_part
from .search import Index, build_index, retrieve
from .storage import load_corpus, save_corpus
from .types import Article, ArticleId, LegalAct, ScoredDocument, StructuralUnit, UnitKind
from .vectors import build_vector_index, load_vectors, retrieve_vector

__all__ = [
    "Article",
    "ArticleId",
    "LegalAct",
    "StructuralUnit",
    "UnitKind",
    "ScoredDocument",
    "Index",
    "AgentAnswer",
    "AgentConfig",
    "normalize_source",
    "parse_act",
    "canonical_article_id",
    "save_corpus",
    "load_corpus",
    "normalize_text",
    "score_part",
    "score_document_naive",
    "score_document_fast",
    "build_index",
    "retrieve",
    "load_vectors",
    "build_vector_index",
    "retrieve_vector",
    "run_agent",
    "fit_context",
    "load_dataset",
    "extract_structured",
    "score_item",
    "aggregate",
    "run_eval",
]
