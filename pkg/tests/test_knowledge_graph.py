"""Entity/edge store, ingestion, alignment, and persistence tests."""

import random

import pytest

from closurekb import knowledge_graph as kg
from closurekb import model_dsl as md
from closurekb.errors import (
    ConflictingEntity,
    DanglingRelation,
    FrozenGraphError,
    SchemaViolation,
    UnknownEntity,
)

LISTING_STYLE = (
    "set T = 1..4; var y{T} binary; param B13{T};"
    " con c{t in T : t >= 2}: y[t] <= B13[t-1];"
)


def ingest_source(source: str) -> kg.KnowledgeGraph:
    graph = kg.KnowledgeGraph()
    ast = md.parse_model(source)
    kg.ingest_model(ast, md.extract_symbols(ast), graph)
    return graph


def edge_set(graph):
    return {(e.src, e.dst, e.kind) for e in graph.edges}


def test_ingest_listing_style_edges():
    graph = ingest_source(LISTING_STYLE)
    assert edge_set(graph) == {
        ("c", "y", kg.USED_IN),
        ("c", "B13", kg.USED_IN),
        ("c", "T", kg.DEPENDS_ON),
        ("y", "T", kg.DEPENDS_ON),
        ("B13", "T", kg.DEPENDS_ON),
    }
    assert graph.entity("c").kind == kg.CONSTRAINT
    assert graph.entity("y").kind == kg.DECISION_VARIABLE
    assert "expression" in graph.entity("c").fields
    assert kg.audit_graph(graph) == []


def test_ingest_set_only_model_has_no_edges():
    graph = ingest_source("set T = 1..2;")
    assert len(graph) == 1
    assert graph.edges == set()


def test_ingest_conflicting_kind_raises():
    graph = ingest_source("set T = 1..2; var y{T} binary;")
    ast = md.parse_model("param y = 1;")
    with pytest.raises(ConflictingEntity):
        kg.ingest_model(ast, md.extract_symbols(ast), graph)


def test_ingest_undeclared_reference_becomes_inferred_parameter():
    graph = ingest_source("set T = 1..3; var y{T} binary; con c{t in T}: y[t] <= B13[t-1];")
    ent = graph.entity("B13")
    assert ent.kind == kg.PARAMETER
    assert ent.fields.get("inferred") is True
    assert ("c", "B13", kg.USED_IN) in edge_set(graph)


def test_ingest_concept_cards_and_relations():
    graph = kg.KnowledgeGraph()
    cards = [
        kg.ConceptCard(name="incentive price", kind=kg.PARAMETER, snippet="rate paid"),
        kg.ConceptCard(
            name="event",
            kind=kg.AUXILIARY_RULE,
            snippet="window",
            relations=(("depends_on", "incentive price"),),
        ),
    ]
    ids = kg.ingest_concept_cards(cards, graph)
    assert ids == ["paper:incentive price", "paper:event"]
    assert graph.entity("paper:incentive price").source == kg.SOURCE_PAPER
    assert ("paper:event", "paper:incentive price", kg.DEPENDS_ON) in edge_set(graph)


def test_ingest_concept_cards_dangling_relation():
    graph = kg.KnowledgeGraph()
    cards = [
        kg.ConceptCard(
            name="event", kind=kg.CONCEPT, relations=(("used_in", "missing"),)
        )
    ]
    with pytest.raises(DanglingRelation):
        kg.ingest_concept_cards(cards, graph)


def test_ingest_empty_card_list_is_identity():
    graph = ingest_source("set T = 1..2;")
    before = kg.save(graph)
    assert kg.ingest_concept_cards([], graph) == []
    assert kg.save(graph) == before


def test_align_by_hint():
    graph = ingest_source("param m11Power = 2;")
    kg.ingest_concept_cards(
        [kg.ConceptCard(name="machine power", kind=kg.PARAMETER, solver_symbol_hint="m11Power")],
        graph,
    )
    result = kg.align(graph)
    assert [(e.src, e.dst) for e in result.edges] == [("paper:machine power", "m11Power")]
    assert result.ambiguities == ()


def test_align_ambiguity_produces_report_and_no_edge():
    # Both code names normalize to "mpower", so the hintless card is ambiguous.
    graph = ingest_source("param mPower = 2; param m_Power = 3;")
    kg.ingest_concept_cards([kg.ConceptCard(name="M power", kind=kg.PARAMETER)], graph)
    result = kg.align(graph)
    assert result.edges == ()
    assert len(result.ambiguities) == 1
    paper_id, candidates = result.ambiguities[0]
    assert paper_id == "paper:M power"
    assert candidates == ("mPower", "m_Power")


def test_align_never_links_ambiguous_matches_property():
    rng = random.Random(60)
    for _ in range(100):
        graph = kg.KnowledgeGraph()
        stem = rng.choice(["flow", "powerCap", "rate"])
        n_collisions = rng.randint(1, 3)
        variants = [stem, f"{stem.upper()}", f"{stem}_", f"_{stem}"][:n_collisions]
        for i, variant in enumerate(variants):
            graph.add_entity(
                kg.Entity(id=f"c{i}", kind=kg.PARAMETER, name=variant,
                          fields={"solver_symbol": f"c{i}"})
            )
        kg.ingest_concept_cards(
            [kg.ConceptCard(name=stem.lower(), kind=kg.PARAMETER)], graph
        )
        result = kg.align(graph)
        aligned_targets = {e.dst for e in result.edges}
        if n_collisions == 1:
            assert aligned_targets == {"c0"}
        else:
            assert result.edges == ()
            assert len(result.ambiguities) == 1
            assert len(result.ambiguities[0][1]) == n_collisions


def test_align_no_paper_entities_is_empty():
    graph = ingest_source("param m11Power = 2;")
    result = kg.align(graph)
    assert result.edges == () and result.ambiguities == ()


def test_normalize_name():
    assert kg.normalize_name("B_ref") == "bref"
    assert kg.normalize_name("machine power") == "machinepower"
    assert kg.normalize_name("LoadReduction") == "loadreduction"


def test_neighbors_sorted_and_filtered():
    graph = ingest_source(LISTING_STYLE)
    assert graph.neighbors("c", {kg.USED_IN}, "out") == ["B13", "y"]
    assert graph.neighbors("c", set(), "out") == []
    assert graph.neighbors("T", {kg.DEPENDS_ON}, "in") == ["B13", "c", "y"]
    with pytest.raises(UnknownEntity):
        graph.neighbors("nope", {kg.USED_IN}, "out")


def test_self_loop_and_dangling_edges_rejected():
    graph = ingest_source("set T = 1..2;")
    with pytest.raises(SchemaViolation):
        graph.add_edge("T", "T", kg.DEPENDS_ON)
    with pytest.raises(UnknownEntity):
        graph.add_edge("T", "ghost", kg.USED_IN)


def test_frozen_graph_rejects_writes():
    graph = ingest_source("set T = 1..2;")
    graph.freeze()
    with pytest.raises(FrozenGraphError):
        graph.add_entity(kg.Entity(id="x", kind=kg.PARAMETER, name="x"))


# --- Persistence ----------------------------------------------------------------

def test_save_load_round_trip_listing_graph():
    graph = ingest_source(LISTING_STYLE)
    assert kg.load(kg.save(graph)) == graph


def test_save_load_round_trip_empty_graph():
    graph = kg.KnowledgeGraph()
    assert kg.load(kg.save(graph)) == graph


def test_load_rejects_unknown_kind():
    doc = kg.save(ingest_source("set T = 1..2;"))
    doc["entities"][0]["kind"] = "variabel"
    with pytest.raises(SchemaViolation):
        kg.load(doc)


def test_load_rejects_unknown_top_level_key():
    doc = kg.save(kg.KnowledgeGraph())
    doc["extra"] = 1
    with pytest.raises(SchemaViolation):
        kg.load(doc)


def test_load_rejects_missing_key_and_bad_edge():
    doc = kg.save(kg.KnowledgeGraph())
    del doc["edges"]
    with pytest.raises(SchemaViolation):
        kg.load(doc)
    doc2 = kg.save(ingest_source("set T = 1..2;"))
    doc2["edges"] = [{"src": "T", "dst": "ghost", "kind": "used_in"}]
    with pytest.raises(SchemaViolation):
        kg.load(doc2)


def random_graph(rng: random.Random, n_entities: int) -> kg.KnowledgeGraph:
    graph = kg.KnowledgeGraph()
    kinds = list(kg.ENTITY_KINDS)
    for i in range(n_entities):
        source = rng.choice(kg.SOURCES)
        fields = {"weight": rng.randint(0, 9)}
        if source == kg.SOURCE_CODE:
            fields["solver_symbol"] = f"sym{i}"
        if rng.random() < 0.3:
            fields["tags"] = [rng.choice("abc") for _ in range(rng.randint(0, 3))]
        graph.add_entity(
            kg.Entity(
                id=f"e{i:03d}",
                kind=rng.choice(kinds),
                name=f"entity {i}",
                description=rng.choice(["", "a note", "longer description here"]),
                fields=fields,
                source=source,
            )
        )
    ids = graph.sorted_ids()
    for _ in range(rng.randint(0, n_entities * 2)):
        src, dst = rng.sample(ids, 2)
        graph.add_edge(src, dst, rng.choice(kg.EDGE_KINDS))
    return graph


def test_save_load_lossless_on_random_graphs_up_to_200_entities():
    rng = random.Random(77)
    for _ in range(20):
        graph = random_graph(rng, rng.randint(1, 200))
        loaded = kg.load(kg.save(graph))
        assert loaded == graph
        assert kg.save(loaded) == kg.save(graph)
