"""Context packaging, code generation, static validation, corrective re-retrieval.

The context package lists typed entities dependencies-first, describes the
induced dependency subgraph, and appends background snippets plus the
instruction. The default generator is a deterministic template that declares
every set/param/var in the package and renders stored constraint/objective
statements; an external generator is a wire contract (package text in, code
text out) exercised through mocks or the CLOSUREKB_GENERATOR_ENDPOINT setting.

Validation is static symbol checking: every referenced name must be declared
in the code itself or, when a graph is supplied (fragment mode), exist there
with a compatible kind and arity. The pipeline validates generated models
self-contained, because the solver only ever sees the code.
"""

from __future__ import annotations

import subprocess
import urllib.error
import urllib.request
from dataclasses import dataclass

from . import knowledge_graph as kg
from . import model_dsl
from .closure import closure, induced_subgraph, is_well_defined
from .errors import (
    DuplicateDeclaration,
    GeneratorUnavailable,
    MissingExpression,
    NotClosed,
    ParseError,
)
from .knowledge_graph import EXEC_KINDS, Entity, KnowledgeGraph
from .retrieval import (
    RetrievalResult,
    fuse,
    select_seeds,
    semantic_search,
    structural_retrieve,
    understand_query,
)

DEFAULT_MAX_ROUNDS = 3


# --- Context package ---------------------------------------------------------

@dataclass(frozen=True)
class ContextPackage:
    instruction: str
    typed_entities: tuple[tuple[Entity, str], ...]  # (entity, formal definition line)
    subgraph_description: str
    snippets: tuple[tuple[str, float, str], ...]

    def entity_ids(self) -> list[str]:
        return [ent.id for ent, _line in self.typed_entities]

    def render(self) -> str:
        lines = ["TYPED ENTITIES"]
        for _ent, defline in self.typed_entities:
            lines.append(defline)
        lines.append("")
        lines.append("DEPENDENCY SUBGRAPH")
        lines.append(self.subgraph_description if self.subgraph_description else "(none)")
        lines.append("")
        lines.append("BACKGROUND SNIPPETS")
        if self.snippets:
            for doc_id, score, text in self.snippets:
                lines.append(f"- [{doc_id}] ({score:.4f}) {text}")
        else:
            lines.append("(none)")
        lines.append("")
        lines.append("INSTRUCTION")
        lines.append(self.instruction)
        return "\n".join(lines) + "\n"


def dependency_order(graph: KnowledgeGraph, members) -> list[str]:
    """Members ordered dependencies-first (reverse topological over
    executability edges); cycles are broken by smallest id."""
    member_set = set(members)
    deps: dict[str, set[str]] = {}
    for member in member_set:
        deps[member] = {
            d for d in graph.neighbors(member, EXEC_KINDS, "out") if d in member_set
        }
    remaining = sorted(member_set)
    emitted: set[str] = set()
    order: list[str] = []
    while remaining:
        pick = next((m for m in remaining if deps[m] <= emitted), remaining[0])
        order.append(pick)
        emitted.add(pick)
        remaining.remove(pick)
    return order


def _domain_label(entity: Entity) -> str:
    if entity.kind == kg.DECISION_VARIABLE:
        label = entity.fields.get("domain", "continuous")
        bounds = entity.fields.get("bounds")
        if bounds:
            label += f" in [{model_dsl.format_number(bounds[0])}, {model_dsl.format_number(bounds[1])}]"
        return label
    if entity.kind == kg.PARAMETER:
        return "numeric"
    if entity.kind == kg.INDEX_SET:
        members = entity.fields.get("members")
        if members:
            return "{" + ", ".join(members) + "}"
        lo, hi = entity.fields.get("lo"), entity.fields.get("hi")
        if lo is not None and hi is not None:
            return f"{lo}..{hi}"
        return "-"
    return "-"


def formal_definition(entity: Entity) -> str:
    sets = ", ".join(entity.fields.get("index_sets", ()))
    symbol = entity.fields.get("solver_symbol") or entity.fields.get("solver_symbol_hint") or "-"
    return f"{entity.name} : {entity.kind} : {_domain_label(entity)} : {{{sets}}} : {symbol}"


def build_context_from_members(
    graph: KnowledgeGraph,
    members,
    snippets,
    instruction: str,
    check_closed: bool = True,
) -> ContextPackage:
    if check_closed:
        ok, violations = is_well_defined(graph, members)
        if not ok:
            raise NotClosed(violations)
    order = dependency_order(graph, members)
    typed = tuple(
        (graph.entity(i), formal_definition(graph.entity(i))) for i in order
    )
    sub = induced_subgraph(graph, members)
    edge_lines = [
        f"{e.src} -{e.kind}-> {e.dst}"
        for e in sorted(sub.edges, key=lambda e: (e.src, e.dst, e.kind))
    ]
    return ContextPackage(
        instruction=instruction,
        typed_entities=typed,
        subgraph_description="\n".join(edge_lines),
        snippets=tuple(snippets),
    )


def build_context(graph: KnowledgeGraph, retrieval: RetrievalResult, instruction: str) -> ContextPackage:
    """Assemble the dependency-closed context package for a retrieval result."""
    return build_context_from_members(
        graph, retrieval.structural, retrieval.snippets, instruction, check_closed=True
    )


# --- Generators ------------------------------------------------------------------

def _declaration_statement(entity: Entity) -> str | None:
    if entity.kind == kg.INDEX_SET:
        members = entity.fields.get("members")
        if members:
            return model_dsl.emit_set(model_dsl.SetDecl(entity.id, members=tuple(members)))
        return model_dsl.emit_set(
            model_dsl.SetDecl(entity.id, lo=entity.fields.get("lo"), hi=entity.fields.get("hi"))
        )
    if entity.kind == kg.PARAMETER:
        data = entity.fields.get("data")
        if isinstance(data, list):
            data = tuple(float(v) for v in data)
        elif data is not None:
            data = float(data)
        return model_dsl.emit_param(
            model_dsl.ParamDecl(
                entity.id,
                index_sets=tuple(entity.fields.get("index_sets", ())),
                data=data,
            )
        )
    if entity.kind == kg.DECISION_VARIABLE:
        bounds = entity.fields.get("bounds")
        return model_dsl.emit_var(
            model_dsl.VarDecl(
                entity.id,
                index_sets=tuple(entity.fields.get("index_sets", ())),
                domain=entity.fields.get("domain", "continuous"),
                bounds=tuple(bounds) if bounds else None,
            )
        )
    return None


class TemplateGenerator:
    """Deterministic generator: declarations in dependency order, then stored
    constraint statements, then one stored objective statement.

    Raises MissingExpression when a constraint or objective entity in the
    package has no stored expression (paper-only knowledge has nothing
    executable to render). When several objectives are present only the
    smallest-id one is rendered, since a model admits a single objective.
    """

    def __call__(self, package: ContextPackage) -> str:
        declarations: list[str] = []
        constraints: list[str] = []
        objectives: list[tuple[str, str]] = []
        for entity, _line in package.typed_entities:
            if entity.kind in (kg.CONSTRAINT, kg.OBJECTIVE):
                expression = entity.fields.get("expression")
                if not expression:
                    raise MissingExpression(entity.id)
                if entity.kind == kg.CONSTRAINT:
                    constraints.append(expression)
                else:
                    objectives.append((entity.id, expression))
                continue
            if entity.source != kg.SOURCE_CODE:
                # Concepts realize through their aligned code entities.
                continue
            statement = _declaration_statement(entity)
            if statement is not None:
                declarations.append(statement)
        lines = declarations + constraints
        if objectives:
            objectives.sort()
            lines.append(objectives[0][1])
        return "\n".join(lines) + ("\n" if lines else "")


class ExternalEndpointGenerator:
    """Client for the external generator exchange: request body is the rendered
    package (UTF-8), response body is code text. http(s) endpoints are POSTed;
    any other endpoint string is run as a local process with the package on
    stdin. Non-success or timeout raises GeneratorUnavailable."""

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def __call__(self, package: ContextPackage) -> str:
        body = package.render().encode("utf-8")
        if self.endpoint.startswith("http://") or self.endpoint.startswith("https://"):
            request = urllib.request.Request(
                self.endpoint, data=body, headers={"Content-Type": "text/plain; charset=utf-8"}
            )
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    if not 200 <= response.status < 300:
                        raise GeneratorUnavailable(
                            f"endpoint returned status {response.status}"
                        )
                    return response.read().decode("utf-8")
            except (urllib.error.URLError, OSError, TimeoutError) as exc:
                raise GeneratorUnavailable(f"endpoint unreachable: {exc}") from exc
        try:
            proc = subprocess.run(
                [self.endpoint],
                input=body,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise GeneratorUnavailable(f"generator process failed: {exc}") from exc
        if proc.returncode != 0:
            raise GeneratorUnavailable(
                f"generator process exited with status {proc.returncode}"
            )
        return proc.stdout.decode("utf-8")


def generate(package: ContextPackage, generator) -> str:
    """Run a generator over the package; external output is returned verbatim."""
    return generator(package)


# --- Validation ------------------------------------------------------------------

VALUE_EXPECTATION = "variable_or_parameter"

_CODE_KIND_LABEL = {
    model_dsl.SET: kg.INDEX_SET,
    model_dsl.PARAM: kg.PARAMETER,
    model_dsl.VAR: kg.DECISION_VARIABLE,
    model_dsl.CONSTRAINT: kg.CONSTRAINT,
    model_dsl.OBJECTIVE: kg.OBJECTIVE,
}


@dataclass(frozen=True)
class ValidationReport:
    status: str  # ok | failed
    missing_declarations: tuple[str, ...] = ()
    kind_mismatches: tuple[tuple[str, str, str], ...] = ()
    arity_mismatches: tuple[tuple[str, int, int], ...] = ()
    parse_error: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "missing_declarations": list(self.missing_declarations),
            "kind_mismatches": [list(t) for t in self.kind_mismatches],
            "arity_mismatches": [list(t) for t in self.arity_mismatches],
            "parse_error": self.parse_error,
        }


def _graph_resolution(graph: KnowledgeGraph | None, name: str) -> tuple[str, int] | None:
    """(kind label, arity) of the best graph match for an identifier, if any."""
    if graph is None:
        return None
    for entity in graph.find_by_name(name):
        if entity.kind in (kg.DECISION_VARIABLE, kg.PARAMETER, kg.INDEX_SET):
            arity = len(entity.fields.get("index_sets", ())) if entity.kind != kg.INDEX_SET else 0
            return entity.kind, arity
        return entity.kind, 0
    return None


def validate(code: str, graph: KnowledgeGraph | None = None) -> ValidationReport:
    """Static symbolic-completeness check of generated code.

    Every referenced symbol must be declared in the code or, when a graph is
    supplied, exist there with a compatible kind: value positions accept
    variables/parameters, iteration positions accept index sets only, and the
    used arity must match the declared arity.
    """
    try:
        ast = model_dsl.parse_model(code)
    except (ParseError, DuplicateDeclaration) as exc:
        return ValidationReport(status="failed", parse_error=str(exc))

    table = model_dsl.extract_symbols(ast)
    missing: set[str] = set()
    kind_mismatches: set[tuple[str, str, str]] = set()
    arity_mismatches: set[tuple[str, int, int]] = set()

    def resolve(name: str) -> tuple[str, int] | None:
        decl = table.declarations.get(name)
        if decl is not None:
            return _CODE_KIND_LABEL[decl.kind], decl.arity
        return _graph_resolution(graph, name)

    for ref in table.references:
        resolution = resolve(ref.name)
        if resolution is None:
            missing.add(ref.name)
            continue
        kind_label, declared_arity = resolution
        if kind_label not in (kg.DECISION_VARIABLE, kg.PARAMETER):
            kind_mismatches.add((ref.name, VALUE_EXPECTATION, kind_label))
            continue
        if declared_arity != ref.arity:
            arity_mismatches.add((ref.name, declared_arity, ref.arity))

    iteration_names: list[str] = []
    for con in ast.constraints:
        iteration_names.extend(model_dsl.iteration_sets(con.quantifier, [con.left, con.right]))
    if ast.objective is not None:
        iteration_names.extend(model_dsl.iteration_sets(None, [ast.objective.expr]))
    for decl in list(ast.params) + list(ast.vars):
        iteration_names.extend(decl.index_sets)

    for name in iteration_names:
        resolution = resolve(name)
        if resolution is None:
            missing.add(name)
            continue
        kind_label, _arity = resolution
        if kind_label != kg.INDEX_SET:
            kind_mismatches.add((name, kg.INDEX_SET, kind_label))

    report_ok = not missing and not kind_mismatches and not arity_mismatches
    return ValidationReport(
        status="ok" if report_ok else "failed",
        missing_declarations=tuple(sorted(missing)),
        kind_mismatches=tuple(sorted(kind_mismatches)),
        arity_mismatches=tuple(sorted(arity_mismatches)),
    )


# --- Corrective re-retrieval loop ---------------------------------------------------

def resolve_missing_name(graph: KnowledgeGraph, name: str) -> str | None:
    """Entity id for a missing symbol, by name, solver symbol, or hint."""
    direct = graph.find_by_name(name)
    if direct:
        return direct[0].id
    hinted = [
        ent
        for ent in graph.entities.values()
        if ent.fields.get("solver_symbol_hint") == name
    ]
    hinted.sort(key=lambda e: (e.source != kg.SOURCE_CODE, e.id))
    return hinted[0].id if hinted else None


def repair_loop(
    query: str,
    graph: KnowledgeGraph,
    index,
    generator,
    max_rounds: int = DEFAULT_MAX_ROUNDS,
    snippet_k: int = 5,
) -> tuple[str, ValidationReport, int]:
    """retrieve -> build -> generate -> validate, re-retrieving missing symbols.

    On missing declarations, each name is looked up in the graph and its
    closure unioned into the structural set for the next round; the context
    set therefore never shrinks. Stops on an ok report or budget exhaustion
    and returns the last code and report. Generated code is validated
    self-contained (no graph assist): the solver only sees the code.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    parsed = understand_query(query, graph)
    seeds = select_seeds(parsed, graph)
    extra: set[str] = set()
    code = ""
    report = ValidationReport(status="failed", parse_error="generator never ran")
    rounds_used = 0
    for _round in range(max_rounds):
        rounds_used += 1
        structural = structural_retrieve(graph, sorted(set(seeds) | extra))
        snippets = semantic_search(index, query, snippet_k) if index is not None else []
        fused = fuse(parsed, structural, snippets, graph, k=snippet_k)
        package = build_context(graph, fused, query)
        try:
            code = generate(package, generator)
        except MissingExpression as exc:
            report = ValidationReport(status="failed", parse_error=f"generation failed: {exc}")
            continue
        report = validate(code)
        if report.ok:
            break
        for name in report.missing_declarations:
            found = resolve_missing_name(graph, name)
            if found is not None:
                extra.add(found)
    return code, report, rounds_used
