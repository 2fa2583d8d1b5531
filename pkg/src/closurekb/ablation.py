"""Ablation harness: knowledge-source and retrieval-mode contrasts.

Each run executes a single retrieve -> package -> generate -> validate pass
(no corrective re-retrieval, so the contrast between closure expansion and a
plain top-k window is visible in the reports). Closure mode is the full
pipeline; window mode feeds the k nearest semantic hits to the generator with
no closure expansion, which is the non-type-aware baseline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import codegen, corpus, retrieval
from .errors import ClosureKbError, MissingExpression

CLOSURE_MODE = "closure"
WINDOW_MODE = "window"


@dataclass(frozen=True)
class AblationConfig:
    knowledge_sources: str = corpus.HETEROGENEOUS
    retrieval_mode: str = CLOSURE_MODE
    window_k: int = 3
    runs: int = 1
    generator: str = "template"  # "template" or a mock script path

    def __post_init__(self):
        if self.knowledge_sources not in corpus.SOURCE_MODES:
            raise ClosureKbError(f"unknown knowledge_sources {self.knowledge_sources!r}")
        if self.retrieval_mode not in (CLOSURE_MODE, WINDOW_MODE):
            raise ClosureKbError(f"unknown retrieval_mode {self.retrieval_mode!r}")
        if self.retrieval_mode == WINDOW_MODE and self.window_k < 1:
            raise ClosureKbError("window_k must be >= 1 in window mode")
        if self.runs < 1:
            raise ClosureKbError("runs must be >= 1")


def config_from_json(doc: dict) -> AblationConfig:
    return AblationConfig(
        knowledge_sources=doc.get("knowledge_sources", corpus.HETEROGENEOUS),
        retrieval_mode=doc.get("retrieval_mode", CLOSURE_MODE),
        window_k=doc.get("window_k", 3),
        runs=doc.get("runs", 1),
        generator=doc.get("generator", "template"),
    )


@dataclass(frozen=True)
class RunRow:
    run: int
    status: str  # ok | failed | generation_failed
    missing: tuple[str, ...]
    empty_snippets: bool
    detail: str = ""


@dataclass(frozen=True)
class AblationReport:
    config: AblationConfig
    rows: tuple[RunRow, ...]

    @property
    def ok_runs(self) -> int:
        return sum(1 for row in self.rows if row.status == "ok")

    def to_text(self) -> str:
        lines = [
            f"knowledge_sources={self.config.knowledge_sources}",
            f"retrieval_mode={self.config.retrieval_mode}",
            f"window_k={self.config.window_k}",
            f"runs={self.config.runs}",
            f"generator={self.config.generator}",
            f"ok_runs={self.ok_runs}/{len(self.rows)}",
        ]
        for row in self.rows:
            parts = [
                f"run={row.run}",
                f"status={row.status}",
                f"missing={','.join(row.missing) if row.missing else '-'}",
                f"empty_snippets={'yes' if row.empty_snippets else 'no'}",
            ]
            if row.detail:
                parts.append(f"detail={row.detail}")
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "config": {
                "knowledge_sources": self.config.knowledge_sources,
                "retrieval_mode": self.config.retrieval_mode,
                "window_k": self.config.window_k,
                "runs": self.config.runs,
                "generator": self.config.generator,
            },
            "ok_runs": self.ok_runs,
            "rows": [
                {
                    "run": row.run,
                    "status": row.status,
                    "missing": list(row.missing),
                    "empty_snippets": row.empty_snippets,
                    "detail": row.detail,
                }
                for row in self.rows
            ],
        }


class ScriptedGenerator:
    """Mock generator fed from a JSON script: {"responses": [code, ...]}.

    Responses are consumed per call (cycling), which is how LLM run-to-run
    variability is reintroduced into an otherwise deterministic harness.
    """

    def __init__(self, responses):
        if not responses:
            raise ClosureKbError("mock script has no responses")
        self.responses = list(responses)
        self.calls = 0

    @classmethod
    def from_path(cls, path) -> "ScriptedGenerator":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(doc["responses"])

    def __call__(self, package) -> str:
        response = self.responses[self.calls % len(self.responses)]
        self.calls += 1
        return response


def _make_generator(selector: str):
    if selector == "template":
        return codegen.TemplateGenerator()
    return ScriptedGenerator.from_path(selector)


def run_single(query: str, graph, index, generator, mode: str, window_k: int) -> RunRow:
    parsed = retrieval.understand_query(query, graph)
    if mode == CLOSURE_MODE:
        seeds = retrieval.select_seeds(parsed, graph)
        structural = retrieval.structural_retrieve(graph, seeds)
        snippets = retrieval.semantic_search(index, query, retrieval.DEFAULT_SNIPPET_K)
        fused = retrieval.fuse(parsed, structural, snippets, graph)
        package = codegen.build_context(graph, fused, query)
    else:
        hits = retrieval.semantic_search(index, query, window_k)
        members = [doc_id for doc_id, _score, _text in hits if doc_id in graph]
        package = codegen.build_context_from_members(
            graph, members, hits, query, check_closed=False
        )
    empty_snippets = not package.snippets
    try:
        code = codegen.generate(package, generator)
    except MissingExpression as exc:
        return RunRow(run=0, status="generation_failed", missing=(), empty_snippets=empty_snippets, detail=str(exc))
    report = codegen.validate(code)
    return RunRow(
        run=0,
        status="ok" if report.ok else "failed",
        missing=report.missing_declarations,
        empty_snippets=empty_snippets,
        detail=report.parse_error or "",
    )


def run_ablation(config: AblationConfig, corpus_dir) -> AblationReport:
    corpus_dir = Path(corpus_dir)
    query_path = corpus_dir / "query.txt"
    if not query_path.exists():
        raise ClosureKbError(f"corpus dir {corpus_dir} lacks query.txt")
    query = query_path.read_text(encoding="utf-8").strip()
    inputs = sorted(
        p
        for p in corpus_dir.iterdir()
        if p.name.endswith((".mm", ".cards.json", ".battery.json", ".fjs", ".kg.json"))
    )
    graph, _alignment = corpus.ingest_corpus(inputs, sources=config.knowledge_sources)
    index = retrieval.index_snippets(graph)
    generator = _make_generator(config.generator)
    rows = []
    for run in range(1, config.runs + 1):
        row = run_single(query, graph, index, generator, config.retrieval_mode, config.window_k)
        rows.append(RunRow(run=run, status=row.status, missing=row.missing,
                           empty_snippets=row.empty_snippets, detail=row.detail))
    return AblationReport(config=config, rows=tuple(rows))
