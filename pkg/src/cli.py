#!/usr/bin/env python3
"""
Command-line interface for statute-search.

    statute-search ingest act.txt corpus.json
    statute-search search "pełnomocnictwo prokura" --corpus corpus.json -k 5
    statute-search ask "Who can be incapacitated?" --corpus corpus.json
    statute-search eval --corpus corpus.json --dataset exam.jsonl --out report.json
    statute-search bench --synthetic-kb 500
    statute-search bench --corpus corpus.json --query-file queries.txt
    statute-search embed --corpus corpus.json vectors.jsonl

Exit codes: 0 success, 1 domain error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from .agent import DEFAULT_SYSTEM_PROMPT, AgentAnswer, AgentConfig, run_agent
from .bench import load_queries, run_bench, synthetic_act, synthetic_queries
from .config import BACKENDS, EXTRACTORS, RunConfig, resolve_config
from .corpus import fused_superscript_map, normalize_source, parse_act
from .errors import ConfigError, StatuteSearchError
from .evaluation import (
    EvalConfig,
    ModelExtractor,
    PatternExtractor,
    Subject,
    load_dataset,
    load_report,
    relative_improvement,
    render_table,
    run_eval,
    write_report,
)
from .model import ModelClient, build_model
from .scoring import normalize_text
from .search import Backend, Index, PositionalRetriever, Retriever, build_index, excerpt, retrieve
from .storage import load_corpus, save_corpus
from .types import ArticleId, LegalAct
from .vectors import (
    EmbeddingClient,
    VectorRetriever,
    build_vector_index,
    embed_corpus,
    load_vectors,
    save_vectors,
)

logger = logging.getLogger(__name__)


def positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"{value!r} is not an integer") from e
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {number}")
    return number


def _fused_map(config: RunConfig, act: LegalAct) -> dict[str, ArticleId]:
    ids = [ArticleId.parse(s) for s in config.superscripts] or act.article_ids()
    return fused_superscript_map(ids)


def _load_act(config: RunConfig) -> LegalAct:
    config.require_files(corpus=True)
    assert config.corpus_path is not None
    return load_corpus(config.corpus_path)


class _Session:
    """Corpus, retriever and model for one command; closes clients on exit."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.embedder: Optional[EmbeddingClient] = None
        self.model: Optional[ModelClient] = None

    @classmethod
    async def open(cls, config: RunConfig, need_model: bool = False) -> "_Session":
        session = cls(config)
        try:
            session._load(need_model)
        except Exception:
            await session.aclose()
            raise
        return session

    def _load(self, need_model: bool) -> None:
        config = self.config
        self.act = _load_act(config)
        self.fused_map = _fused_map(config, self.act)
        if config.backend == Backend.VECTOR.value:
            assert config.vector_path is not None
            self.index: Index = build_vector_index(self.act, load_vectors(config.vector_path))
            self.embedder = EmbeddingClient.from_settings(config.embedding)
            self.retriever: Retriever = VectorRetriever(self.index, self.embedder)
        else:
            self.index = build_index(self.act)
            self.retriever = PositionalRetriever(
                self.index, strict=config.strict_scoring, workers=config.parallelism
            )
        if need_model:
            self.model = build_model(config.model)

    def agent_config(self) -> AgentConfig:
        return AgentConfig(
            max_tool_calls=self.config.max_tool_calls,
            k=self.config.k,
            context_budget_tokens=self.config.context_budget_tokens,
            system_prompt=self.config.system_prompt or DEFAULT_SYSTEM_PROMPT,
        )

    async def aclose(self) -> None:
        if self.model is not None:
            await self.model.aclose()
        if self.embedder is not None:
            await self.embedder.aclose()


async def cmd_ingest(config: RunConfig, input_path: str, output_path: str) -> int:
    """Parse a plain-text act into a corpus file."""
    source = Path(input_path)
    if not source.exists():
        raise ConfigError(f"input file not found: {source}")
    clean = normalize_source(source.read_text(encoding="utf-8"))
    fused = fused_superscript_map(ArticleId.parse(s) for s in config.superscripts)
    act = parse_act(clean, fused)
    save_corpus(act, output_path)

    lengths = [a.approx_token_len for a in act.articles]
    average = sum(lengths) / len(lengths) if lengths else 0.0
    print(f"Parsed {len(act.articles)} article(s) in {len(act.units)} unit(s), "
          f"average {average:.1f} tokens per article")
    print(f"Wrote {output_path}")
    return 0


async def cmd_search(config: RunConfig, query: str) -> int:
    """Print the top-k articles for a query."""
    session = await _Session.open(config)
    try:
        if session.index.backend == Backend.VECTOR:
            results = await session.retriever.search(query, config.k)
        else:
            results = retrieve(
                session.index, query, config.k,
                strict=config.strict_scoring, workers=config.parallelism,
            )
    finally:
        await session.aclose()

    if not results:
        print("No results.")
        return 0
    query_len = len(normalize_text(query))
    for doc in results:
        score = f"{doc.value:.4f}" if session.index.backend == Backend.VECTOR else str(doc.value)
        print(f"{doc.rank:>3}  {str(doc.article.id):<14} {score:>7}  {excerpt(session.index, doc, query_len)}")
    return 0


def _print_answer(answer: AgentAnswer) -> None:
    print(answer.final_text)
    print()
    if answer.cited_articles:
        print("Citations:")
        ungrounded = set(answer.ungrounded)
        for article_id in answer.cited_articles:
            flag = "UNGROUNDED" if article_id in ungrounded else "grounded"
            print(f"  {str(article_id):<14} {flag}")
    else:
        print("Citations: none")
    queries = ", ".join(repr(q) for q in answer.retrieval_queries) or "none"
    print(f"Retrieval queries: {queries}")


async def cmd_ask(config: RunConfig, question: Optional[str]) -> int:
    """Answer one question, or read questions from stdin until a blank line."""
    session = await _Session.open(config, need_model=True)
    assert session.model is not None
    agent_config = session.agent_config()
    try:
        if question:
            answer = await run_agent(question, session.retriever, session.model, agent_config, session.fused_map)
            _print_answer(answer)
            return 0

        interactive = sys.stdin.isatty()
        while True:
            if interactive:
                print("question> ", end="", flush=True)
            line = await asyncio.to_thread(sys.stdin.readline)
            if not line.strip():
                return 0
            answer = await run_agent(line.strip(), session.retriever, session.model, agent_config, session.fused_map)
            _print_answer(answer)
            print()
    finally:
        await session.aclose()


async def cmd_eval(
    config: RunConfig,
    subject: Subject,
    out: Optional[str],
    baseline: Optional[str],
    name: Optional[str],
) -> int:
    """Evaluate an assistant on an exam dataset."""
    config.require_files(dataset=True)
    assert config.dataset_path is not None
    if baseline and not Path(baseline).exists():
        raise ConfigError(f"baseline report not found: {baseline}")
    dataset = load_dataset(config.dataset_path)

    session = await _Session.open(config, need_model=True)
    assert session.model is not None
    extractor = (
        ModelExtractor(session.model, session.fused_map)
        if config.extractor == "model"
        else PatternExtractor(session.fused_map)
    )
    eval_config = EvalConfig(
        agent=session.agent_config(),
        parallelism=config.parallelism,
        tolerance=config.tolerance,
        transcripts_path=config.transcripts_path,
    )
    try:
        report = await run_eval(
            dataset, subject, eval_config, session.model,
            retriever=session.retriever, extractor=extractor, fused_map=session.fused_map,
        )
    finally:
        await session.aclose()

    label = name or (config.model.model if subject == Subject.RAW else f"agent ({config.model.model})")
    print(render_table([(label, report)]))
    for failure in report.failures:
        print(f"failed: {failure.item_id}: {failure.error}", file=sys.stderr)
    if out:
        write_report(report, out)
        print(f"Wrote {out}")
    if baseline:
        try:
            change = relative_improvement(load_report(baseline), report)
            print(f"Joint score change over baseline: {change:+.1f}%")
        except ValueError as e:
            print(f"Joint score change over baseline: undefined ({e})")
    return 0


async def cmd_bench(config: RunConfig, synthetic_kb: Optional[int], query_file: Optional[str],
                    n_queries: int, query_length: int, seed: int) -> int:
    """Time the naive and fast scorers over a corpus and a query set.

    Queries come from query_file, one per line, or are sampled from the corpus.
    """
    if query_file and not Path(query_file).exists():
        raise ConfigError(f"query file not found: {query_file}")
    act = synthetic_act(synthetic_kb, seed) if synthetic_kb else _load_act(config)
    index = build_index(act)
    if query_file:
        queries = load_queries(query_file)
    else:
        queries = synthetic_queries(act, n_queries, query_length, seed)
    result = await asyncio.to_thread(run_bench, index, queries)
    print(result.summary())
    return 1 if result.mismatches else 0


async def cmd_embed(config: RunConfig, output_path: str) -> int:
    """Embed every article through the embedding provider."""
    act = _load_act(config)
    client = EmbeddingClient.from_settings(config.embedding)
    try:
        records = await embed_corpus(act, client, config.embedding.batch_size)
    finally:
        await client.aclose()
    save_vectors(records, output_path)
    print(f"Wrote {len(records)} vector(s) to {output_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statute-search",
        description="Article retrieval and retrieval-augmented question answering over legal acts",
    )
    parser.add_argument("--config", help="JSON config file (default: $STATUTE_SEARCH_CONFIG)")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def corpus_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--corpus", help="Corpus JSON file written by ingest")
        p.add_argument("-k", type=positive_int, help="Number of articles to retrieve (default 50)")
        p.add_argument("--backend", choices=BACKENDS, help="Retrieval backend")
        p.add_argument("--vectors", help="Vector JSONL file for the vector backend")
        p.add_argument("--strict", action="store_true", default=None,
                       help="Score documents shorter than the query as 0")
        p.add_argument("--parallelism", type=positive_int, help="Concurrent workers / eval items")

    def model_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--model", help="Model name")
        p.add_argument("--base-url", help="Chat-completions API base URL")
        p.add_argument("--model-script", help="Scripted mock model (JSON) instead of a live endpoint")
        p.add_argument("--max-tool-calls", type=positive_int, help="Retriever calls per question")
        p.add_argument("--budget", type=positive_int, help="Context budget in tokens")

    p = sub.add_parser("ingest", help="Parse a plain-text act into a corpus file")
    p.add_argument("input", help="Plain-text act")
    p.add_argument("output", help="Corpus JSON file to write")
    p.add_argument("--superscript", action="append", dest="superscripts",
                   help="Known superscripted article (e.g. 109^1) for repairing flattened markers; repeatable")

    p = sub.add_parser("search", help="Show the top-k articles for a query")
    p.add_argument("query")
    corpus_args(p)

    p = sub.add_parser("ask", help="Answer a question with the retrieval agent (REPL without a question)")
    p.add_argument("question", nargs="?")
    corpus_args(p)
    model_args(p)

    p = sub.add_parser("eval", help="Evaluate on an exam dataset")
    p.add_argument("--dataset", help="Exam JSONL file")
    p.add_argument("--subject", choices=[s.value for s in Subject], default=Subject.AGENT.value)
    p.add_argument("--extractor", choices=EXTRACTORS)
    p.add_argument("--out", help="Write the JSON report here")
    p.add_argument("--transcripts", help="Write per-item transcripts (JSONL) here")
    p.add_argument("--baseline", help="Earlier report to compare the joint score against")
    p.add_argument("--name", help="Row label in the results table")
    corpus_args(p)
    model_args(p)

    p = sub.add_parser("bench", help="Time the naive and fast scorers")
    p.add_argument("--corpus", help="Corpus JSON file")
    p.add_argument("--synthetic-kb", type=positive_int, help="Use a synthetic corpus of this size")
    p.add_argument("--query-file", help="Queries to time, one per line (default: sampled from the corpus)")
    p.add_argument("--queries", type=positive_int, default=3, help="Number of sampled queries")
    p.add_argument("--query-length", type=positive_int, default=64, help="Length of sampled queries")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("embed", help="Write a vector file through the embedding provider")
    p.add_argument("output", help="Vector JSONL file to write")
    p.add_argument("--corpus", help="Corpus JSON file")
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    get = vars(args).get
    return {
        "corpus_path": get("corpus"),
        "dataset_path": get("dataset"),
        "k": get("k"),
        "backend": get("backend"),
        "vector_path": get("vectors"),
        "strict_scoring": get("strict"),
        "parallelism": get("parallelism"),
        "max_tool_calls": get("max_tool_calls"),
        "context_budget_tokens": get("budget"),
        "extractor": get("extractor"),
        "transcripts_path": get("transcripts"),
        "superscripts": get("superscripts"),
        "model.model": get("model"),
        "model.base_url": get("base_url"),
        "model.script_path": get("model_script"),
    }


async def dispatch(args: argparse.Namespace, config: RunConfig) -> int:
    if args.command == "ingest":
        return await cmd_ingest(config, args.input, args.output)
    if args.command == "search":
        return await cmd_search(config, args.query)
    if args.command == "ask":
        return await cmd_ask(config, args.question)
    if args.command == "eval":
        return await cmd_eval(config, Subject(args.subject), args.out, args.baseline, args.name)
    if args.command == "bench":
        return await cmd_bench(config, args.synthetic_kb, args.query_file, args.queries, args.query_length, args.seed)
    if args.command == "embed":
        return await cmd_embed(config, args.output)
    raise ConfigError(f"unknown command {args.command!r}")


async def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = resolve_config(args.config, _overrides(args))
        config.require_files()
        return await dispatch(args, config)
    except ConfigError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 2
    except StatuteSearchError as e:
        print(f"Error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"Error: file not found: {e.filename}", file=sys.stderr)
        return 2


def run() -> None:
    """Entry point for the CLI."""
    sys.exit(asyncio.run(main()))


if __name__ == "__main__":
    run()
