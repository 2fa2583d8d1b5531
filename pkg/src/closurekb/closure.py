"""Minimal dependency closure over executability edges.

The closure of a target entity is the forward-reachable set over used_in and
depends_on edges, including the target. Traversal is breadth-first with
neighbors expanded in sorted-id order, so visit order is deterministic and
cycles terminate via the visited set.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import UnknownEntity
from .knowledge_graph import EXEC_KINDS, KnowledgeGraph


@dataclass(frozen=True)
class ClosureResult:
    target: str
    members: frozenset[str]
    visit_order: tuple[str, ...]
    edge_count: int


def _exec_edges_within(graph: KnowledgeGraph, members) -> list:
    edges = [
        e
        for e in graph.edges
        if e.kind in EXEC_KINDS and e.src in members and e.dst in members
    ]
    edges.sort(key=lambda e: (e.src, e.dst, e.kind))
    return edges


def closure(graph: KnowledgeGraph, target: str) -> ClosureResult:
    """BFS forward reachability over executability edges from `target`."""
    if target not in graph:
        raise UnknownEntity(f"no entity with id {target!r}")
    visited = {target}
    order = [target]
    queue = deque([target])
    while queue:
        current = queue.popleft()
        for neighbor in graph.neighbors(current, EXEC_KINDS, "out"):
            if neighbor not in visited:
                visited.add(neighbor)
                order.append(neighbor)
                queue.append(neighbor)
    members = frozenset(visited)
    return ClosureResult(
        target=target,
        members=members,
        visit_order=tuple(order),
        edge_count=len(_exec_edges_within(graph, members)),
    )


def induced_subgraph(graph: KnowledgeGraph, members) -> KnowledgeGraph:
    """Subgraph of `members` with exactly the internal executability edges.

    aligns_to edges are excluded; entity records are shared (read-only use).
    """
    member_set = set(members)
    sub = KnowledgeGraph()
    for entity_id in sorted(member_set):
        if entity_id not in graph:
            raise UnknownEntity(f"no entity with id {entity_id!r}")
        sub.add_entity(graph.entity(entity_id))
    for edge in _exec_edges_within(graph, member_set):
        sub.add_edge(edge.src, edge.dst, edge.kind)
    return sub


def is_well_defined(graph: KnowledgeGraph, members) -> tuple[bool, list[tuple[str, str]]]:
    """True iff `members` is closed under executability out-edges.

    Returns the escaping (src, dst) pairs, sorted, when it is not.
    """
    member_set = set(members)
    violations = sorted(
        (e.src, e.dst)
        for e in graph.edges
        if e.kind in EXEC_KINDS and e.src in member_set and e.dst not in member_set
    )
    return (not violations, violations)
