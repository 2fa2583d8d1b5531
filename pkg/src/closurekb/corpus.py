"""Corpus ingestion: turn mixed input files into one aligned knowledge graph.

File types are recognized by suffix:
  *.mm           MiniModel source (code entities)
  *.cards.json   concept cards (paper entities)
  *.battery.json battery instance + event (builds the battery graph)
  *.fjs          FJSP instance (baseline model is built and ingested)
  *.kg.json      prebuilt knowledge-unit document (merged as-is)

Also provides the corpus fixtures used by the ablation harness.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import battery, fjsp
from . import knowledge_graph as kg
from . import model_dsl
from .errors import ClosureKbError
from .knowledge_graph import KnowledgeGraph

PAPERS_ONLY = "papers_only"
CODE_ONLY = "code_only"
HETEROGENEOUS = "heterogeneous"
SOURCE_MODES = (PAPERS_ONLY, CODE_ONLY, HETEROGENEOUS)


def merge_graphs(dst: KnowledgeGraph, src: KnowledgeGraph) -> None:
    for entity_id in src.sorted_ids():
        dst.add_entity(src.entities[entity_id])
    for edge in sorted(src.edges, key=lambda e: (e.src, e.dst, e.kind)):
        dst.add_edge(edge.src, edge.dst, edge.kind)


def filter_sources(graph: KnowledgeGraph, mode: str) -> KnowledgeGraph:
    """Restrict to one knowledge source; edges with a dropped endpoint go too."""
    if mode == HETEROGENEOUS:
        return graph
    keep = kg.SOURCE_PAPER if mode == PAPERS_ONLY else kg.SOURCE_CODE
    out = KnowledgeGraph()
    for entity_id in graph.sorted_ids():
        ent = graph.entities[entity_id]
        if ent.source == keep:
            out.add_entity(ent)
    for edge in sorted(graph.edges, key=lambda e: (e.src, e.dst, e.kind)):
        if edge.src in out and edge.dst in out:
            out.add_edge(edge.src, edge.dst, edge.kind)
    return out


def ingest_path(path: Path, graph: KnowledgeGraph) -> list[str]:
    """Ingest one input file into the graph; returns the new entity ids."""
    name = path.name
    text = path.read_text(encoding="utf-8")
    if name.endswith(".kg.json"):
        loaded = kg.load(json.loads(text))
        before = set(graph.entities)
        merge_graphs(graph, loaded)
        return sorted(set(graph.entities) - before)
    if name.endswith(".cards.json"):
        cards = kg.cards_from_json(json.loads(text))
        return kg.ingest_concept_cards(cards, graph)
    if name.endswith(".battery.json"):
        data, event = battery.data_from_json(json.loads(text))
        if event is None:
            raise ClosureKbError(f"{name}: battery instance lacks an event section")
        built = battery.build_battery_kg(data, event)
        before = set(graph.entities)
        merge_graphs(graph, built)
        return sorted(set(graph.entities) - before)
    if name.endswith(".fjs"):
        instance = fjsp.parse_fjs(text)
        ast = fjsp.build_fjsp_model(instance, fjsp.BASELINE)
        return kg.ingest_model(ast, model_dsl.extract_symbols(ast), graph)
    if name.endswith(".mm"):
        ast = model_dsl.parse_model(text)
        return kg.ingest_model(ast, model_dsl.extract_symbols(ast), graph)
    raise ClosureKbError(f"unrecognized input file type: {name}")


def ingest_corpus(paths, sources: str = HETEROGENEOUS) -> tuple[KnowledgeGraph, kg.AlignResult]:
    """Ingest all inputs, restrict to the requested sources, align, freeze."""
    if sources not in SOURCE_MODES:
        raise ClosureKbError(f"unknown knowledge_sources mode {sources!r}")
    graph = KnowledgeGraph()
    for path in paths:
        ingest_path(Path(path), graph)
    graph = filter_sources(graph, sources)
    alignment = kg.align(graph)
    graph.freeze()
    return graph, alignment


# --- Fixtures ---------------------------------------------------------------------

BATTERY_QUERY = "explain the constraints of machine m01 and generate corresponding LINGO code"
DISPERSED_QUERY = "add the coupling limit constraint for the flow network"


def write_battery_corpus(directory) -> list[Path]:
    """Battery instance + concept cards + the source-ablation query."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    instance = directory / "battery.battery.json"
    instance.write_text(
        json.dumps(battery.data_to_json(battery.paper_case_data(), battery.paper_event()), indent=2)
        + "\n",
        encoding="utf-8",
    )
    cards = directory / "battery.cards.json"
    cards.write_text(
        json.dumps(kg.cards_to_json(battery.battery_concept_cards()), indent=2) + "\n",
        encoding="utf-8",
    )
    query = directory / "query.txt"
    query.write_text(BATTERY_QUERY + "\n", encoding="utf-8")
    return [instance, cards, query]


def dispersed_fixture_graph() -> KnowledgeGraph:
    """Dependencies of the target constraint spread across entities whose
    descriptions share no token with the fixture query, plus two paper notes
    whose descriptions monopolize the semantic top-k."""
    graph = KnowledgeGraph()

    def code(entity_id, kind, description, fields):
        fields = dict(fields)
        fields.setdefault("solver_symbol", entity_id)
        graph.add_entity(
            kg.Entity(
                id=entity_id,
                kind=kind,
                name=entity_id,
                description=description,
                fields=fields,
                source=kg.SOURCE_CODE,
            )
        )

    code("horizon", kg.INDEX_SET, "Planning periods.", {"lo": 1, "hi": 4})
    code(
        "flowRate", kg.DECISION_VARIABLE, "Throughput decision per period.",
        {"index_sets": ["horizon"], "domain": model_dsl.CONTINUOUS, "bounds": [0, 10]},
    )
    code(
        "reservePool", kg.PARAMETER, "Stock held back each period.",
        {"index_sets": ["horizon"], "data": [3, 3, 3, 3]},
    )
    code("capScale", kg.PARAMETER, "Multiplier applied to held stock.", {"index_sets": [], "data": 2})
    code("baseMargin", kg.PARAMETER, "Additive slack allowance.", {"index_sets": [], "data": 1})
    code(
        "couplingLimit", kg.CONSTRAINT,
        "The coupling limit constraint bounds each flow step by the prior reserve.",
        {
            "expression": (
                "con couplingLimit{t in horizon : t >= 2}: "
                "flowRate[t] <= capScale*reservePool[t-1] + baseMargin;"
            )
        },
    )
    graph.add_edge("couplingLimit", "flowRate", kg.USED_IN)
    graph.add_edge("couplingLimit", "reservePool", kg.USED_IN)
    graph.add_edge("couplingLimit", "capScale", kg.USED_IN)
    graph.add_edge("couplingLimit", "baseMargin", kg.USED_IN)
    graph.add_edge("couplingLimit", "horizon", kg.DEPENDS_ON)
    graph.add_edge("flowRate", "horizon", kg.DEPENDS_ON)
    graph.add_edge("reservePool", "horizon", kg.DEPENDS_ON)

    for note_id, blurb in (
        ("backgroundNoteA", "Adding a coupling limit constraint keeps the flow network stable."),
        ("backgroundNoteB", "The flow network coupling limit constraint is explained in this note."),
    ):
        graph.add_entity(
            kg.Entity(
                id=note_id,
                kind=kg.CONCEPT,
                name=note_id,
                description=blurb,
                fields={},
                source=kg.SOURCE_PAPER,
            )
        )
    return graph


def write_dispersed_corpus(directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    graph_path = directory / "dispersed.kg.json"
    graph_path.write_text(
        json.dumps(kg.save(dispersed_fixture_graph()), indent=2) + "\n", encoding="utf-8"
    )
    query = directory / "query.txt"
    query.write_text(DISPERSED_QUERY + "\n", encoding="utf-8")
    return [graph_path, query]
