"""Typed knowledge graph: entities, executability edges, ingestion, alignment.

Entities carry one of seven kinds; edges carry one of three kinds. All
executability edges (used_in, depends_on) are stored in REQUIREMENT direction:
src requires dst to be well-defined (constraint -> variable, variable ->
index set). Ingestion of parsed models and concept cards normalizes into that
direction so that dependency closure is a plain forward traversal.

Persistence is a versioned JSON knowledge-unit document; unknown top-level
keys and unknown kind strings are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import model_dsl
from .errors import (
    ConflictingEntity,
    DanglingRelation,
    FrozenGraphError,
    SchemaViolation,
    UnknownEntity,
)
from .model_dsl import ModelAst, SymbolTable

DECISION_VARIABLE = "decision_variable"
PARAMETER = "parameter"
INDEX_SET = "index_set"
CONSTRAINT = "constraint"
OBJECTIVE = "objective"
AUXILIARY_RULE = "auxiliary_rule"
CONCEPT = "concept"

ENTITY_KINDS = (
    DECISION_VARIABLE,
    PARAMETER,
    INDEX_SET,
    CONSTRAINT,
    OBJECTIVE,
    AUXILIARY_RULE,
    CONCEPT,
)

USED_IN = "used_in"
DEPENDS_ON = "depends_on"
ALIGNS_TO = "aligns_to"
EDGE_KINDS = (USED_IN, DEPENDS_ON, ALIGNS_TO)
EXEC_KINDS = frozenset({USED_IN, DEPENDS_ON})

SOURCE_CODE = "code"
SOURCE_PAPER = "paper"
SOURCES = (SOURCE_CODE, SOURCE_PAPER)

_DECL_KIND_MAP = {
    model_dsl.SET: INDEX_SET,
    model_dsl.PARAM: PARAMETER,
    model_dsl.VAR: DECISION_VARIABLE,
    model_dsl.CONSTRAINT: CONSTRAINT,
    model_dsl.OBJECTIVE: OBJECTIVE,
}


@dataclass
class Entity:
    id: str
    kind: str
    name: str
    description: str = ""
    fields: dict = field(default_factory=dict)
    source: str = SOURCE_CODE

    def __post_init__(self):
        if self.kind not in ENTITY_KINDS:
            raise SchemaViolation(f"unknown entity kind {self.kind!r}")
        if self.source not in SOURCES:
            raise SchemaViolation(f"unknown entity source {self.source!r}")


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    kind: str

    def __post_init__(self):
        if self.kind not in EDGE_KINDS:
            raise SchemaViolation(f"unknown edge kind {self.kind!r}")


@dataclass(frozen=True)
class ConceptCard:
    """Structured stand-in for a parsed paper concept."""

    name: str
    kind: str
    description: str = ""
    solver_symbol_hint: str | None = None
    snippet: str = ""
    relations: tuple[tuple[str, str], ...] = ()  # (relation kind, target card name)

    def __post_init__(self):
        if not self.name:
            raise SchemaViolation("concept card name must be nonempty")
        if self.kind not in ENTITY_KINDS:
            raise SchemaViolation(f"unknown concept card kind {self.kind!r}")
        for rel_kind, _target in self.relations:
            if rel_kind not in (USED_IN, DEPENDS_ON):
                raise SchemaViolation(
                    f"concept card relation kind must be used_in/depends_on, got {rel_kind!r}"
                )


def concept_entity_id(name: str) -> str:
    return f"paper:{name}"


class KnowledgeGraph:
    """In-memory typed graph with deterministic adjacency."""

    def __init__(self):
        self.entities: dict[str, Entity] = {}
        self.edges: set[Edge] = set()
        self._out: dict[str, set[Edge]] = {}
        self._in: dict[str, set[Edge]] = {}
        self.frozen = False

    # -- mutation ------------------------------------------------------------

    def _check_writable(self):
        if self.frozen:
            raise FrozenGraphError("graph is frozen")

    def add_entity(self, entity: Entity) -> Entity:
        """Insert an entity; re-adding the same id with the same kind is a no-op."""
        self._check_writable()
        existing = self.entities.get(entity.id)
        if existing is not None:
            if existing.kind != entity.kind:
                raise ConflictingEntity(entity.id, existing.kind, entity.kind)
            return existing
        self.entities[entity.id] = entity
        self._out[entity.id] = set()
        self._in[entity.id] = set()
        return entity

    def add_edge(self, src: str, dst: str, kind: str) -> Edge:
        self._check_writable()
        if src not in self.entities:
            raise UnknownEntity(f"edge source {src!r} not in graph")
        if dst not in self.entities:
            raise UnknownEntity(f"edge target {dst!r} not in graph")
        if src == dst:
            raise SchemaViolation(f"self-loop on {src!r} rejected")
        edge = Edge(src=src, dst=dst, kind=kind)
        if edge not in self.edges:
            self.edges.add(edge)
            self._out[src].add(edge)
            self._in[dst].add(edge)
        return edge

    def freeze(self) -> "KnowledgeGraph":
        self.frozen = True
        return self

    # -- queries ---------------------------------------------------------------

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self.entities

    def __len__(self) -> int:
        return len(self.entities)

    def entity(self, entity_id: str) -> Entity:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise UnknownEntity(f"no entity with id {entity_id!r}") from None

    def sorted_ids(self) -> list[str]:
        return sorted(self.entities)

    def neighbors(self, entity_id: str, kinds, direction: str = "out") -> list[str]:
        """Endpoint ids of matching edges, sorted for determinism."""
        if entity_id not in self.entities:
            raise UnknownEntity(f"no entity with id {entity_id!r}")
        kinds = frozenset(kinds)
        if direction == "out":
            found = {e.dst for e in self._out[entity_id] if e.kind in kinds}
        elif direction == "in":
            found = {e.src for e in self._in[entity_id] if e.kind in kinds}
        else:
            raise ValueError(f"direction must be 'out' or 'in', got {direction!r}")
        return sorted(found)

    def edges_from(self, entity_id: str):
        return sorted(self._out.get(entity_id, ()), key=lambda e: (e.dst, e.kind))

    def find_by_name(self, name: str) -> list[Entity]:
        """Entities whose name or solver_symbol equals `name`, code entities first."""
        hits = [
            ent
            for ent in self.entities.values()
            if ent.name == name or ent.fields.get("solver_symbol") == name
        ]
        hits.sort(key=lambda e: (e.source != SOURCE_CODE, e.id))
        return hits

    def __eq__(self, other):
        if not isinstance(other, KnowledgeGraph):
            return NotImplemented
        if set(self.entities) != set(other.entities) or self.edges != other.edges:
            return False
        for entity_id, ent in self.entities.items():
            o = other.entities[entity_id]
            if (ent.kind, ent.name, ent.description, ent.fields, ent.source) != (
                o.kind,
                o.name,
                o.description,
                o.fields,
                o.source,
            ):
                return False
        return True


def audit_graph(graph: KnowledgeGraph) -> list[str]:
    """Referential-integrity audit; returns a list of violation strings."""
    problems = []
    for edge in sorted(graph.edges, key=lambda e: (e.src, e.dst, e.kind)):
        if edge.src not in graph.entities:
            problems.append(f"dangling edge source {edge.src!r}")
        if edge.dst not in graph.entities:
            problems.append(f"dangling edge target {edge.dst!r}")
        if edge.src == edge.dst:
            problems.append(f"self-loop on {edge.src!r}")
        if edge.kind not in EDGE_KINDS:
            problems.append(f"unknown edge kind {edge.kind!r}")
    for ent in graph.entities.values():
        if ent.source == SOURCE_CODE and "solver_symbol" not in ent.fields:
            problems.append(f"code entity {ent.id!r} lacks solver_symbol")
    return problems


# --- Ingestion ------------------------------------------------------------------

def ingest_model(ast: ModelAst, table: SymbolTable, graph: KnowledgeGraph) -> list[str]:
    """Ingest a parsed model: one entity per declaration, requirement-direction edges.

    References from a constraint/objective produce site -(used_in)-> name edges;
    declarations indexed by sets and iteration bindings produce depends_on edges.
    A reference to a name with no declaration still becomes an entity (kind
    parameter, flagged inferred) so that every reference edge is representable.
    """
    ids: list[str] = []

    def declare(name: str, kind: str, fields: dict) -> str:
        fields = dict(fields)
        fields.setdefault("solver_symbol", name)
        entity = Entity(id=name, kind=kind, name=name, description="", fields=fields, source=SOURCE_CODE)
        added = graph.add_entity(entity)
        if added is entity:
            ids.append(name)
        return name

    for decl in ast.sets:
        fields = {"members": list(decl.members)} if decl.members is not None else {"lo": decl.lo, "hi": decl.hi}
        declare(decl.name, INDEX_SET, fields)
    for decl in ast.params:
        fields = {"index_sets": list(decl.index_sets)}
        if decl.data is not None:
            fields["data"] = list(decl.data) if isinstance(decl.data, tuple) else decl.data
        declare(decl.name, PARAMETER, fields)
    for decl in ast.vars:
        fields = {"index_sets": list(decl.index_sets), "domain": decl.domain}
        if decl.bounds is not None:
            fields["bounds"] = list(decl.bounds)
        declare(decl.name, DECISION_VARIABLE, fields)
    for con in ast.constraints:
        declare(con.name, CONSTRAINT, {"expression": model_dsl.emit_constraint(con)})
    if ast.objective is not None:
        obj = ast.objective
        declare(obj.name, OBJECTIVE, {"expression": model_dsl.emit_objective(obj), "sense": obj.sense})

    def ensure_target(name: str) -> str:
        if name not in graph:
            # Referenced but never declared: keep the reference representable.
            graph.add_entity(
                Entity(
                    id=name,
                    kind=PARAMETER,
                    name=name,
                    fields={"solver_symbol": name, "inferred": True},
                    source=SOURCE_CODE,
                )
            )
            ids.append(name)
        return name

    for ref in table.references:
        if ref.name == ref.site:
            continue
        graph.add_edge(ref.site, ensure_target(ref.name), USED_IN)

    for decl in list(ast.params) + list(ast.vars):
        for set_name in decl.index_sets:
            graph.add_edge(decl.name, ensure_target(set_name), DEPENDS_ON)
    for con in ast.constraints:
        for set_name in model_dsl.iteration_sets(con.quantifier, [con.left, con.right]):
            graph.add_edge(con.name, ensure_target(set_name), DEPENDS_ON)
    if ast.objective is not None:
        for set_name in model_dsl.iteration_sets(None, [ast.objective.expr]):
            graph.add_edge(ast.objective.name, ensure_target(set_name), DEPENDS_ON)

    return ids


def ingest_concept_cards(cards, graph: KnowledgeGraph) -> list[str]:
    """Ingest concept cards as paper-source entities plus their relations."""
    ids: list[str] = []
    for card in cards:
        fields = {"snippet": card.snippet}
        if card.solver_symbol_hint:
            fields["solver_symbol_hint"] = card.solver_symbol_hint
        entity = Entity(
            id=concept_entity_id(card.name),
            kind=card.kind,
            name=card.name,
            description=card.description,
            fields=fields,
            source=SOURCE_PAPER,
        )
        added = graph.add_entity(entity)
        if added is entity:
            ids.append(entity.id)
    for card in cards:
        src = concept_entity_id(card.name)
        for rel_kind, target_name in card.relations:
            dst = concept_entity_id(target_name)
            if dst not in graph:
                raise DanglingRelation(
                    f"card {card.name!r} relates to unknown concept {target_name!r}"
                )
            graph.add_edge(src, dst, rel_kind)
    return ids


def cards_to_json(cards) -> list[dict]:
    return [
        {
            "name": card.name,
            "kind": card.kind,
            "description": card.description,
            "solver_symbol_hint": card.solver_symbol_hint,
            "snippet": card.snippet,
            "relations": [list(rel) for rel in card.relations],
        }
        for card in cards
    ]


def cards_from_json(doc) -> list[ConceptCard]:
    if not isinstance(doc, list):
        raise SchemaViolation("concept card file must hold a list of cards")
    cards = []
    for raw in doc:
        cards.append(
            ConceptCard(
                name=raw["name"],
                kind=raw["kind"],
                description=raw.get("description", ""),
                solver_symbol_hint=raw.get("solver_symbol_hint"),
                snippet=raw.get("snippet", ""),
                relations=tuple(tuple(rel) for rel in raw.get("relations", ())),
            )
        )
    return cards


# --- Alignment ------------------------------------------------------------------

def normalize_name(name: str) -> str:
    """Case-fold and strip underscores, spaces, and other subscript markers."""
    return "".join(ch for ch in name.casefold() if ch.isalnum())


@dataclass(frozen=True)
class AlignResult:
    edges: tuple[Edge, ...]
    ambiguities: tuple[tuple[str, tuple[str, ...]], ...]  # (paper id, candidate ids)


def align(graph: KnowledgeGraph) -> AlignResult:
    """Link each paper entity to its unique code realization, if any.

    A solver_symbol_hint that exactly matches a code entity's solver symbol
    takes precedence over name normalization. Ambiguous matches (two or more
    candidates) are reported and produce no edge.
    """
    code_by_symbol: dict[str, list[str]] = {}
    code_by_norm: dict[str, list[str]] = {}
    for entity_id in graph.sorted_ids():
        ent = graph.entities[entity_id]
        if ent.source != SOURCE_CODE:
            continue
        symbol = ent.fields.get("solver_symbol", ent.name)
        code_by_symbol.setdefault(symbol, []).append(entity_id)
        code_by_norm.setdefault(normalize_name(ent.name), []).append(entity_id)

    edges: list[Edge] = []
    ambiguities: list[tuple[str, tuple[str, ...]]] = []
    for entity_id in graph.sorted_ids():
        ent = graph.entities[entity_id]
        if ent.source != SOURCE_PAPER:
            continue
        hint = ent.fields.get("solver_symbol_hint")
        candidates = code_by_symbol.get(hint, []) if hint else []
        if not candidates:
            candidates = code_by_norm.get(normalize_name(ent.name), [])
        candidates = sorted(set(candidates))
        if len(candidates) == 1:
            edges.append(graph.add_edge(entity_id, candidates[0], ALIGNS_TO))
        elif len(candidates) >= 2:
            ambiguities.append((entity_id, tuple(candidates)))
    return AlignResult(edges=tuple(edges), ambiguities=tuple(ambiguities))


# --- Persistence ----------------------------------------------------------------

_DOC_KEYS = {"version", "entities", "edges"}
_ENTITY_KEYS = {"id", "kind", "name", "description", "source", "fields"}
_EDGE_KEYS = {"src", "dst", "kind"}


def save(graph: KnowledgeGraph) -> dict:
    """Serialize to a knowledge-unit document (JSON-compatible dict)."""
    return {
        "version": 1,
        "entities": [
            {
                "id": ent.id,
                "kind": ent.kind,
                "name": ent.name,
                "description": ent.description,
                "source": ent.source,
                "fields": ent.fields,
            }
            for ent in (graph.entities[i] for i in graph.sorted_ids())
        ],
        "edges": [
            {"src": e.src, "dst": e.dst, "kind": e.kind}
            for e in sorted(graph.edges, key=lambda e: (e.src, e.dst, e.kind))
        ],
    }


def load(document: dict) -> KnowledgeGraph:
    """Rebuild a graph from a knowledge-unit document; SchemaViolation on malformed input."""
    if not isinstance(document, dict):
        raise SchemaViolation("knowledge-unit document must be an object")
    unknown = set(document) - _DOC_KEYS
    if unknown:
        raise SchemaViolation(f"unknown top-level keys: {sorted(unknown)}")
    missing = _DOC_KEYS - set(document)
    if missing:
        raise SchemaViolation(f"missing top-level keys: {sorted(missing)}")
    if document["version"] != 1:
        raise SchemaViolation(f"unsupported version {document['version']!r}")

    graph = KnowledgeGraph()
    for raw in document["entities"]:
        if not isinstance(raw, dict) or set(raw) != _ENTITY_KEYS:
            raise SchemaViolation(f"entity record keys must be {sorted(_ENTITY_KEYS)}")
        if raw["kind"] not in ENTITY_KINDS:
            raise SchemaViolation(f"unknown entity kind {raw['kind']!r}")
        if raw["source"] not in SOURCES:
            raise SchemaViolation(f"unknown entity source {raw['source']!r}")
        if not isinstance(raw["fields"], dict):
            raise SchemaViolation("entity fields must be an object")
        if raw["id"] in graph:
            raise SchemaViolation(f"duplicate entity id {raw['id']!r}")
        graph.add_entity(
            Entity(
                id=raw["id"],
                kind=raw["kind"],
                name=raw["name"],
                description=raw["description"],
                fields=raw["fields"],
                source=raw["source"],
            )
        )
    for raw in document["edges"]:
        if not isinstance(raw, dict) or set(raw) != _EDGE_KEYS:
            raise SchemaViolation(f"edge record keys must be {sorted(_EDGE_KEYS)}")
        if raw["kind"] not in EDGE_KINDS:
            raise SchemaViolation(f"unknown edge kind {raw['kind']!r}")
        try:
            graph.add_edge(raw["src"], raw["dst"], raw["kind"])
        except UnknownEntity as exc:
            raise SchemaViolation(str(exc)) from None
    return graph
