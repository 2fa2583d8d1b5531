"""Query understanding plus the two retrieval streams (semantic and structural).

The semantic stream is a deterministic TF-IDF index over entity snippets and
descriptions; alternate embedders plug in through a text -> fixed-length
vector contract. The structural stream is a union of dependency closures
seeded from entities resolved in the query, with aligns_to followed one hop
from paper seeds so concepts pull in their executable realizations.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field

from . import knowledge_graph as kg
from .closure import closure, is_well_defined
from .errors import EmptyQuery, NotClosed, UnknownEntity
from .knowledge_graph import EXEC_KINDS, KnowledgeGraph

ADD_CONSTRAINT = "add_constraint"
MODIFY_OBJECTIVE = "modify_objective"
EXPLAIN_CONSTRAINT = "explain_constraint"
PARAMETER_QUERY = "parameter_query"
GENERATE_MODEL = "generate_model"
UNKNOWN = "unknown"

NAME_MATCH = "name_match"
NUMERIC_WITH_UNIT = "numeric_with_unit"
TIME_WINDOW = "time_window"

DEFAULT_SNIPPET_K = 5


@dataclass(frozen=True)
class ExtractedEntity:
    surface: str
    entity_id: str | None
    kind: str  # name_match | numeric_with_unit | time_window
    slots: tuple[int, int] | None = None  # populated for time windows


@dataclass(frozen=True)
class ParsedQuery:
    raw: str
    intents: tuple[str, ...]
    entities: tuple[ExtractedEntity, ...]
    numeric_payloads: tuple[tuple[float, str], ...]

    def resolved_ids(self) -> list[str]:
        seen = []
        for ent in self.entities:
            if ent.entity_id is not None and ent.entity_id not in seen:
                seen.append(ent.entity_id)
        return seen


@dataclass(frozen=True)
class RetrievalResult:
    seed_ids: tuple[str, ...]
    structural: frozenset[str]
    snippets: tuple[tuple[str, float, str], ...]  # (doc id, score, text)


# --- Query understanding ----------------------------------------------------

# Intent table: an intent fires when any trigger from each group is present;
# intents are ordered by the position of their earliest trigger match.
_INTENT_TABLE = (
    (ADD_CONSTRAINT, (("add", "introduce"), ("constraint",))),
    (MODIFY_OBJECTIVE, (("modify", "change", "incentive", "reward"), ("objective", "profit"))),
    (EXPLAIN_CONSTRAINT, (("explain",),)),
    (PARAMETER_QUERY, (("what is", "value of"),)),
    (GENERATE_MODEL, (("generate", "code", "model"),)),
)

_WORD_RE = re.compile(r"[a-z0-9]+")
_UNIT_RE = re.compile(r"(\d+(?:\.\d+)?)\s*(\$/kWh|kWh|kW)\b")
_NTH_HOUR_RE = re.compile(r"(\d+)(?:st|nd|rd|th)\s+hour", re.IGNORECASE)
_HOUR_RANGE_RE = re.compile(r"hours?\s+(\d+)\s*(?:–|—|-|to)\s*(\d+)", re.IGNORECASE)


def _tokens_with_spans(text: str) -> list[tuple[str, int, int]]:
    return [(m.group(), m.start(), m.end()) for m in _WORD_RE.finditer(text.lower())]


def _split_name_tokens(name: str) -> tuple[str, ...]:
    """Split an entity name into lowercase tokens at non-alphanumerics and
    camelCase boundaries (digits stay attached to the preceding letters)."""
    parts = re.findall(r"[A-Za-z][a-z0-9]*|[A-Z]+(?![a-z])|\d+", name)
    merged: list[str] = []
    for part in parts:
        if part.isdigit() and merged and merged[-1].isalpha():
            merged[-1] = merged[-1] + part
        else:
            merged.append(part)
    return tuple(p.lower() for p in merged)


def _trigger_position(lowered: str, trigger: str) -> int | None:
    # Whole-word match with an optional plural, so "address" never fires "add"
    # but "constraints" still fires "constraint".
    m = re.search(rf"\b{re.escape(trigger)}(?:s|es)?\b", lowered)
    return m.start() if m else None


def _match_intents(text: str) -> tuple[str, ...]:
    lowered = text.lower()
    matched: list[tuple[int, str]] = []
    for intent, groups in _INTENT_TABLE:
        positions = []
        for group in groups:
            best = None
            for trigger in group:
                pos = _trigger_position(lowered, trigger)
                if pos is not None and (best is None or pos < best):
                    best = pos
            if best is None:
                positions = None
                break
            positions.append(best)
        if positions is not None:
            matched.append((min(positions), intent))
    matched.sort(key=lambda item: item[0])
    if not matched:
        return (UNKNOWN,)
    return tuple(intent for _pos, intent in matched)


def _slots_per_hour(graph: KnowledgeGraph) -> int | None:
    for entity_id in graph.sorted_ids():
        ent = graph.entities[entity_id]
        if ent.kind == kg.PARAMETER and kg.normalize_name(ent.name) == "slotsperhour":
            data = ent.fields.get("data")
            if isinstance(data, (int, float)) and data > 0:
                return int(data)
    return None


def _extract_name_matches(text: str, graph: KnowledgeGraph) -> list[ExtractedEntity]:
    """Longest contiguous token match against entity names; overlapping matches
    are resolved by preferring code entities, then longer, earlier, smaller id."""
    tokens = _tokens_with_spans(text)
    token_values = [t[0] for t in tokens]
    candidates: list[tuple[int, int, int, str, str]] = []
    for entity_id in graph.sorted_ids():
        ent = graph.entities[entity_id]
        name_tokens = _split_name_tokens(ent.name)
        if not name_tokens:
            continue
        width = len(name_tokens)
        for start in range(0, len(token_values) - width + 1):
            if tuple(token_values[start : start + width]) == name_tokens:
                priority = 0 if ent.source == kg.SOURCE_CODE else 1
                candidates.append((priority, -width, start, entity_id, ent.id))
    candidates.sort()
    taken: list[tuple[int, int]] = []
    chosen: list[tuple[int, int, str]] = []
    for _priority, neg_width, start, entity_id, _ in candidates:
        width = -neg_width
        span = (start, start + width)
        if any(s < span[1] and span[0] < e for s, e in taken):
            continue
        if any(entity_id == c[2] for c in chosen):
            continue
        taken.append(span)
        chosen.append((start, width, entity_id))
    chosen.sort()
    out = []
    for start, width, entity_id in chosen:
        char_start = tokens[start][1]
        char_end = tokens[start + width - 1][2]
        out.append(
            ExtractedEntity(
                surface=text[char_start:char_end], entity_id=entity_id, kind=NAME_MATCH
            )
        )
    return out


def understand_query(text: str, graph: KnowledgeGraph) -> ParsedQuery:
    """Parse a natural-language instruction into intents, entities, and payloads."""
    if not text or not text.strip():
        raise EmptyQuery("query text is empty")

    entities: list[ExtractedEntity] = list(_extract_name_matches(text, graph))

    payloads: list[tuple[float, str]] = []
    for m in _UNIT_RE.finditer(text):
        value = float(m.group(1))
        payloads.append((value, m.group(2)))
        entities.append(
            ExtractedEntity(surface=m.group(), entity_id=None, kind=NUMERIC_WITH_UNIT)
        )

    sph = _slots_per_hour(graph)
    for m in _NTH_HOUR_RE.finditer(text):
        hour = int(m.group(1))
        slots = ((hour - 1) * sph + 1, hour * sph) if sph else None
        entities.append(
            ExtractedEntity(surface=m.group(), entity_id=None, kind=TIME_WINDOW, slots=slots)
        )
    for m in _HOUR_RANGE_RE.finditer(text):
        first, last = int(m.group(1)), int(m.group(2))
        slots = ((first - 1) * sph + 1, last * sph) if sph else None
        entities.append(
            ExtractedEntity(surface=m.group(), entity_id=None, kind=TIME_WINDOW, slots=slots)
        )

    return ParsedQuery(
        raw=text,
        intents=_match_intents(text),
        entities=tuple(entities),
        numeric_payloads=tuple(payloads),
    )


# --- Semantic index -----------------------------------------------------------

class TfidfEmbedder:
    """Deterministic TF-IDF embedder over lowercased alphanumeric tokens.

    Satisfies the pluggable embedder contract: after fitting, embed() maps any
    UTF-8 text to a fixed-length vector (dimension = vocabulary size).
    """

    def __init__(self):
        self.vocabulary: list[str] = []
        self._index: dict[str, int] = {}
        self._idf: list[float] = []

    @staticmethod
    def tokenize(text: str) -> list[str]:
        return _WORD_RE.findall(text.lower())

    def fit(self, corpus: list[str]) -> "TfidfEmbedder":
        doc_freq: Counter = Counter()
        for text in corpus:
            doc_freq.update(set(self.tokenize(text)))
        self.vocabulary = sorted(doc_freq)
        self._index = {term: i for i, term in enumerate(self.vocabulary)}
        n_docs = len(corpus)
        self._idf = [
            math.log((n_docs + 1) / (doc_freq[term] + 1)) + 1.0 for term in self.vocabulary
        ]
        return self

    def embed(self, text: str) -> list[float]:
        vector = [0.0] * len(self.vocabulary)
        counts = Counter(self.tokenize(text))
        for term, count in counts.items():
            slot = self._index.get(term)
            if slot is not None:
                vector[slot] = (1.0 + math.log(count)) * self._idf[slot]
        return vector


def cosine(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(x * x for x in b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


@dataclass
class SemanticIndex:
    doc_ids: list[str] = field(default_factory=list)
    texts: dict[str, str] = field(default_factory=dict)
    vectors: dict[str, list[float]] = field(default_factory=dict)
    embedder: object = None


def snippet_text(entity) -> str:
    return entity.fields.get("snippet") or entity.description or ""


def index_snippets(graph: KnowledgeGraph, cards=(), embedder=None) -> SemanticIndex:
    """Build the semantic index from entity descriptions/snippets plus any
    standalone cards. Insertion order independent: documents are sorted by id."""
    docs: dict[str, str] = {}
    for entity_id in graph.sorted_ids():
        text = snippet_text(graph.entities[entity_id])
        if text:
            docs[entity_id] = text
    for card in cards:
        doc_id = f"card:{card.name}"
        if card.snippet:
            docs[doc_id] = card.snippet
    doc_ids = sorted(docs)
    corpus = [docs[i] for i in doc_ids]
    if embedder is None:
        embedder = TfidfEmbedder().fit(corpus)
    vectors = {i: embedder.embed(docs[i]) for i in doc_ids}
    dims = {len(v) for v in vectors.values()}
    if len(dims) > 1:
        raise ValueError("embedder returned vectors of differing dimension")
    return SemanticIndex(doc_ids=doc_ids, texts=docs, vectors=vectors, embedder=embedder)


def semantic_search(index: SemanticIndex, text: str, k: int) -> list[tuple[str, float, str]]:
    """Top-k snippets by cosine similarity; zero-score documents are dropped,
    ties broken by smaller doc id."""
    query_vec = index.embedder.embed(text)
    scored = []
    for doc_id in index.doc_ids:
        score = cosine(query_vec, index.vectors[doc_id])
        if score > 0.0:
            scored.append((doc_id, score))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return [(doc_id, score, index.texts[doc_id]) for doc_id, score in scored[:k]]


# --- Structural stream -----------------------------------------------------------

def structural_retrieve(graph: KnowledgeGraph, seeds) -> frozenset[str]:
    """Union of dependency closures over the seeds; aligns_to edges are followed
    one hop from paper seeds first so concepts pull in their code realizations."""
    expanded: set[str] = set()
    for seed in seeds:
        if seed not in graph:
            raise UnknownEntity(f"no entity with id {seed!r}")
        expanded.add(seed)
        if graph.entity(seed).source == kg.SOURCE_PAPER:
            expanded.update(graph.neighbors(seed, {kg.ALIGNS_TO}, "out"))
    members: set[str] = set()
    for seed in sorted(expanded):
        members.update(closure(graph, seed).members)
    return frozenset(members)


def _dependents_of_kind(graph: KnowledgeGraph, seeds, edge_kinds, wanted_kind) -> set[str]:
    found: set[str] = set()
    for seed in seeds:
        ent = graph.entity(seed)
        anchors = {seed}
        if ent.source == kg.SOURCE_PAPER:
            anchors.update(graph.neighbors(seed, {kg.ALIGNS_TO}, "out"))
        for anchor in sorted(anchors):
            if graph.entity(anchor).kind == wanted_kind:
                continue
            for user in graph.neighbors(anchor, edge_kinds, "in"):
                if graph.entity(user).kind == wanted_kind:
                    found.add(user)
    return found


def select_seeds(parsed: ParsedQuery, graph: KnowledgeGraph) -> list[str]:
    """Seed entities for the structural stream.

    Starts from the ids resolved in the query, then expands by intent: the
    constraint intents (add/explain) pull in the constraints that use each
    non-constraint seed (used_in in-edges), so "constraints of machine X"
    reaches the constraint nodes; modify_objective pulls in the objectives
    depending on a seed, so an event-modification request reaches the
    event-modified objective. Requirement-direction closure alone cannot walk
    from a symbol up to its dependents.
    """
    seeds = list(parsed.resolved_ids())
    expansion: set[str] = set()
    if any(i in (ADD_CONSTRAINT, EXPLAIN_CONSTRAINT) for i in parsed.intents):
        expansion |= _dependents_of_kind(graph, seeds, {kg.USED_IN}, kg.CONSTRAINT)
    if MODIFY_OBJECTIVE in parsed.intents:
        expansion |= _dependents_of_kind(graph, seeds, EXEC_KINDS, kg.OBJECTIVE)
    seeds.extend(sorted(expansion - set(seeds)))
    return seeds


def fuse(
    parsed: ParsedQuery,
    structural,
    snippets,
    graph: KnowledgeGraph,
    k: int = DEFAULT_SNIPPET_K,
) -> RetrievalResult:
    """Fuse the two streams; the structural set must be dependency-closed."""
    structural = frozenset(structural)
    ok, violations = is_well_defined(graph, structural)
    if not ok:
        raise NotClosed(violations)
    kept = [
        (doc_id, score, text)
        for doc_id, score, text in snippets
        if doc_id not in structural
    ]
    return RetrievalResult(
        seed_ids=tuple(parsed.resolved_ids()),
        structural=structural,
        snippets=tuple(kept[:k]),
    )
