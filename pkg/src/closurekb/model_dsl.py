"""MiniModel: a minimal canonical optimization-modeling language.

Parses `;`-terminated declarations (sets, params, vars, constraints, one
objective) into an immutable AST, extracts a symbol table, and emits text in
the canonical dialect (round-trips through the parser) or a LINGO-flavored
dialect (`@for`/`@sum`/`#ge#` style). Comments run from `!` to end of line.

Resolution of names to declarations is deliberately NOT done here; the parser
only enforces grammar and name uniqueness. Kind/arity checking lives in the
code validator so that broken generated code can be diagnosed rather than
rejected outright.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DuplicateDeclaration, ParseError, UnsupportedConstruct

BINARY = "binary"
INTEGER = "integer"
CONTINUOUS = "continuous"
VAR_DOMAINS = (BINARY, INTEGER, CONTINUOUS)

CANONICAL = "canonical"
LINGO_FLAVORED = "lingo_flavored"
DIALECTS = (CANONICAL, LINGO_FLAVORED)


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Index:
    """Index expression: `name`, `name +/- k`, or a bare integer literal.

    base is None for a pure literal; offset then holds the literal value.
    """

    base: str | None
    offset: int


@dataclass(frozen=True)
class Ref:
    name: str
    indices: tuple[Index, ...] = ()


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Compare:
    op: str  # <= >= < > =
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Predicate:
    """Conjunction of comparisons (single comparison is the common case)."""

    parts: tuple[Compare, ...]


@dataclass(frozen=True)
class Quantifier:
    index: str
    over: str
    where: Predicate | None = None


@dataclass(frozen=True)
class Sum:
    quantifier: Quantifier
    body: "Expr"


Expr = Num | Ref | BinOp | Sum


@dataclass(frozen=True)
class SetDecl:
    name: str
    lo: int | None = None
    hi: int | None = None
    members: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ParamDecl:
    name: str
    index_sets: tuple[str, ...] = ()
    data: float | tuple[float, ...] | None = None


@dataclass(frozen=True)
class VarDecl:
    name: str
    index_sets: tuple[str, ...] = ()
    domain: str = CONTINUOUS
    bounds: tuple[float, float] | None = None


@dataclass(frozen=True)
class Constraint:
    name: str
    quantifier: Quantifier | None
    left: Expr
    op: str  # <= = >=
    right: Expr


@dataclass(frozen=True)
class Objective:
    sense: str  # max | min
    name: str
    expr: Expr


@dataclass(frozen=True)
class ModelAst:
    sets: tuple[SetDecl, ...] = ()
    params: tuple[ParamDecl, ...] = ()
    vars: tuple[VarDecl, ...] = ()
    constraints: tuple[Constraint, ...] = ()
    objective: Objective | None = None


# --- Symbol table ------------------------------------------------------------

SET = "set"
PARAM = "param"
VAR = "var"
CONSTRAINT = "constraint"
OBJECTIVE = "objective"


@dataclass(frozen=True)
class Declaration:
    name: str
    kind: str  # set | param | var | constraint | objective
    domain: str | None
    arity: int


@dataclass(frozen=True)
class Reference:
    name: str
    arity: int
    site: str  # constraint or objective name


@dataclass(frozen=True)
class SymbolTable:
    declarations: dict[str, Declaration]
    references: tuple[Reference, ...]


# --- Lexer -------------------------------------------------------------------

KEYWORDS = {
    "set", "param", "var", "con", "max", "min", "sum", "in", "and",
    "binary", "integer", "continuous",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<COMMENT>![^\n]*)
  | (?P<WS>\s+)
  | (?P<NUMBER>\d+(?:\.\d+)?)
  | (?P<IDENT>[A-Za-z][A-Za-z0-9_]*)
  | (?P<DOTDOT>\.\.)
  | (?P<LE><=)
  | (?P<GE>>=)
  | (?P<SYMBOL>[;:,{}\[\]()=+\-*/<>])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # keyword/symbol text, or NUMBER / IDENT / EOF
    value: str
    line: int
    column: int


def _tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line = 1
    line_start = 0
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {source[pos]!r}", line, pos - line_start + 1
            )
        group = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if group == "WS" or group == "COMMENT":
            pass
        elif group == "NUMBER":
            tokens.append(Token("NUMBER", text, line, col))
        elif group == "IDENT":
            kind = text if text in KEYWORDS else "IDENT"
            tokens.append(Token(kind, text, line, col))
        else:
            tokens.append(Token(text, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


# --- Parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.declared: dict[str, int] = {}

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def check(self, kind: str) -> bool:
        return self.peek().kind == kind

    def accept(self, kind: str) -> Token | None:
        if self.check(kind):
            return self.advance()
        return None

    def expect(self, *kinds: str) -> Token:
        tok = self.peek()
        if tok.kind in kinds:
            return self.advance()
        raise ParseError(
            f"unexpected token {tok.value!r}" if tok.kind != "EOF" else "unexpected end of input",
            tok.line,
            tok.column,
            expected=kinds,
        )

    def declare(self, name_tok: Token) -> str:
        name = name_tok.value
        if name in self.declared:
            raise DuplicateDeclaration(name, name_tok.line)
        self.declared[name] = name_tok.line
        return name

    # statements

    def parse_model(self) -> ModelAst:
        sets: list[SetDecl] = []
        params: list[ParamDecl] = []
        var_decls: list[VarDecl] = []
        constraints: list[Constraint] = []
        objective: Objective | None = None
        while not self.check("EOF"):
            tok = self.peek()
            if tok.kind == "set":
                sets.append(self.parse_set())
            elif tok.kind == "param":
                params.append(self.parse_param())
            elif tok.kind == "var":
                var_decls.append(self.parse_var())
            elif tok.kind == "con":
                constraints.append(self.parse_constraint())
            elif tok.kind in ("max", "min"):
                if objective is not None:
                    raise ParseError("multiple objectives", tok.line, tok.column)
                objective = self.parse_objective()
            else:
                raise ParseError(
                    f"unexpected token {tok.value!r}",
                    tok.line,
                    tok.column,
                    expected=("set", "param", "var", "con", "max", "min"),
                )
        return ModelAst(
            sets=tuple(sets),
            params=tuple(params),
            vars=tuple(var_decls),
            constraints=tuple(constraints),
            objective=objective,
        )

    def parse_set(self) -> SetDecl:
        self.expect("set")
        name = self.declare(self.expect("IDENT"))
        self.expect("=")
        if self.check("{"):
            self.advance()
            members = [self.expect("IDENT").value]
            while self.accept(","):
                members.append(self.expect("IDENT").value)
            self.expect("}")
            self.expect(";")
            return SetDecl(name, members=tuple(members))
        lo_tok = self.expect("NUMBER")
        if "." in lo_tok.value:
            raise ParseError("set range bounds must be integers", lo_tok.line, lo_tok.column)
        self.expect("..")
        hi_tok = self.expect("NUMBER")
        if "." in hi_tok.value:
            raise ParseError("set range bounds must be integers", hi_tok.line, hi_tok.column)
        self.expect(";")
        return SetDecl(name, lo=int(lo_tok.value), hi=int(hi_tok.value))

    def parse_index_sets(self) -> tuple[str, ...]:
        if not self.check("{"):
            return ()
        self.advance()
        names = [self.expect("IDENT").value]
        while self.accept(","):
            names.append(self.expect("IDENT").value)
        self.expect("}")
        return tuple(names)

    def parse_signed_number(self) -> float:
        negative = self.accept("-") is not None
        tok = self.expect("NUMBER")
        value = float(tok.value) if "." in tok.value else float(int(tok.value))
        return -value if negative else value

    def parse_param(self) -> ParamDecl:
        self.expect("param")
        name = self.declare(self.expect("IDENT"))
        index_sets = self.parse_index_sets()
        data: float | tuple[float, ...] | None = None
        if self.accept("="):
            if self.check("["):
                self.advance()
                values = [self.parse_signed_number()]
                while self.accept(","):
                    values.append(self.parse_signed_number())
                self.expect("]")
                data = tuple(values)
            else:
                data = self.parse_signed_number()
        self.expect(";")
        return ParamDecl(name, index_sets=index_sets, data=data)

    def parse_var(self) -> VarDecl:
        self.expect("var")
        name = self.declare(self.expect("IDENT"))
        index_sets = self.parse_index_sets()
        domain = self.expect(*VAR_DOMAINS).kind
        bounds = None
        if self.accept("in"):
            self.expect("[")
            lo = self.parse_signed_number()
            self.expect(",")
            hi = self.parse_signed_number()
            self.expect("]")
            bounds = (lo, hi)
        self.expect(";")
        return VarDecl(name, index_sets=index_sets, domain=domain, bounds=bounds)

    def parse_quantifier(self) -> Quantifier:
        self.expect("{")
        index = self.expect("IDENT").value
        self.expect("in")
        over = self.expect("IDENT").value
        where = None
        if self.accept(":"):
            where = self.parse_predicate()
        self.expect("}")
        return Quantifier(index=index, over=over, where=where)

    def parse_predicate(self) -> Predicate:
        parts = [self.parse_comparison()]
        while self.accept("and"):
            parts.append(self.parse_comparison())
        return Predicate(parts=tuple(parts))

    def parse_comparison(self) -> Compare:
        left = self.parse_expr()
        op = self.expect("<=", ">=", "<", ">", "=").kind
        right = self.parse_expr()
        return Compare(op=op, left=left, right=right)

    def parse_constraint(self) -> Constraint:
        self.expect("con")
        name = self.declare(self.expect("IDENT"))
        quantifier = self.parse_quantifier() if self.check("{") else None
        self.expect(":")
        left = self.parse_expr()
        op = self.expect("<=", "=", ">=").kind
        right = self.parse_expr()
        self.expect(";")
        return Constraint(name=name, quantifier=quantifier, left=left, op=op, right=right)

    def parse_objective(self) -> Objective:
        sense = self.expect("max", "min").kind
        name = self.declare(self.expect("IDENT"))
        self.expect(":")
        expr = self.parse_expr()
        self.expect(";")
        return Objective(sense=sense, name=name, expr=expr)

    # expressions

    def parse_expr(self) -> Expr:
        left = self.parse_term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            right = self.parse_term()
            left = BinOp(op=op, left=left, right=right)
        return left

    def parse_term(self) -> Expr:
        left = self.parse_primary()
        while self.peek().kind in ("*", "/"):
            op = self.advance().kind
            right = self.parse_primary()
            left = BinOp(op=op, left=left, right=right)
        return left

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            value = float(tok.value) if "." in tok.value else float(int(tok.value))
            return Num(value)
        if tok.kind == "sum":
            self.advance()
            quantifier = self.parse_quantifier()
            body = self.parse_primary()
            return Sum(quantifier=quantifier, body=body)
        if tok.kind == "(":
            self.advance()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        if tok.kind == "IDENT":
            self.advance()
            indices: tuple[Index, ...] = ()
            if self.accept("["):
                parts = [self.parse_index()]
                while self.accept(","):
                    parts.append(self.parse_index())
                self.expect("]")
                indices = tuple(parts)
            return Ref(name=tok.value, indices=indices)
        raise ParseError(
            f"unexpected token {tok.value!r}" if tok.kind != "EOF" else "unexpected end of input",
            tok.line,
            tok.column,
            expected=("NUMBER", "IDENT", "sum", "("),
        )

    def parse_index(self) -> Index:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            if "." in tok.value:
                raise ParseError("index literals must be integers", tok.line, tok.column)
            return Index(base=None, offset=int(tok.value))
        if tok.kind == "IDENT":
            self.advance()
            offset = 0
            if self.peek().kind in ("+", "-"):
                sign = 1 if self.advance().kind == "+" else -1
                off_tok = self.expect("NUMBER")
                if "." in off_tok.value:
                    raise ParseError(
                        "index offsets must be integer literals", off_tok.line, off_tok.column
                    )
                offset = sign * int(off_tok.value)
            return Index(base=tok.value, offset=offset)
        raise ParseError(
            f"unexpected token {tok.value!r} in index",
            tok.line,
            tok.column,
            expected=("NUMBER", "IDENT"),
        )


def parse_model(source: str) -> ModelAst:
    """Parse MiniModel source text into an AST."""
    return _Parser(_tokenize(source)).parse_model()


# --- Symbol extraction ---------------------------------------------------------

def _walk_refs(expr: Expr, bound: frozenset[str], out: list[tuple[str, int]]) -> None:
    """Collect (name, arity) for every free symbol used in expr.

    Names bound by enclosing quantifiers/sums are local and skipped; a bound
    name used inside an index expression is likewise not a symbol reference.
    Quantifier/sum set names are bindings, not references, and are collected
    separately by iteration-site walkers.
    """
    if isinstance(expr, Num):
        return
    if isinstance(expr, Ref):
        if expr.name not in bound:
            out.append((expr.name, len(expr.indices)))
        for index in expr.indices:
            if index.base is not None and index.base not in bound:
                out.append((index.base, 0))
        return
    if isinstance(expr, BinOp):
        _walk_refs(expr.left, bound, out)
        _walk_refs(expr.right, bound, out)
        return
    if isinstance(expr, Sum):
        inner = bound | {expr.quantifier.index}
        if expr.quantifier.where is not None:
            for cmp in expr.quantifier.where.parts:
                _walk_refs(cmp.left, inner, out)
                _walk_refs(cmp.right, inner, out)
        _walk_refs(expr.body, inner, out)
        return
    raise TypeError(f"unknown expression node {type(expr).__name__}")


def _statement_refs(quantifier: Quantifier | None, exprs: list[Expr]) -> list[tuple[str, int]]:
    out: list[tuple[str, int]] = []
    bound = frozenset()
    if quantifier is not None:
        bound = frozenset({quantifier.index})
        if quantifier.where is not None:
            for cmp in quantifier.where.parts:
                _walk_refs(cmp.left, bound, out)
                _walk_refs(cmp.right, bound, out)
    for expr in exprs:
        _walk_refs(expr, bound, out)
    return out


def statement_references(quantifier: Quantifier | None, exprs: list[Expr]) -> list[tuple[str, int]]:
    """(name, arity) pairs for the free symbols of one statement, in order."""
    pairs = _statement_refs(quantifier, exprs)
    seen: set[tuple[str, int]] = set()
    out = []
    for pair in pairs:
        if pair not in seen:
            seen.add(pair)
            out.append(pair)
    return out


def iteration_sets(quantifier: Quantifier | None, exprs: list[Expr]) -> list[str]:
    """Set names bound by the statement quantifier and any nested sums."""
    names: list[str] = []
    if quantifier is not None:
        names.append(quantifier.over)

    def walk(expr: Expr) -> None:
        if isinstance(expr, BinOp):
            walk(expr.left)
            walk(expr.right)
        elif isinstance(expr, Sum):
            names.append(expr.quantifier.over)
            if expr.quantifier.where is not None:
                for cmp in expr.quantifier.where.parts:
                    walk(cmp.left)
                    walk(cmp.right)
            walk(expr.body)

    for expr in exprs:
        walk(expr)
    return names


def extract_symbols(ast: ModelAst) -> SymbolTable:
    """Read declarations and expression references out of a parsed model."""
    declarations: dict[str, Declaration] = {}
    for decl in ast.sets:
        declarations[decl.name] = Declaration(decl.name, SET, None, 0)
    for decl in ast.params:
        declarations[decl.name] = Declaration(decl.name, PARAM, None, len(decl.index_sets))
    for decl in ast.vars:
        declarations[decl.name] = Declaration(decl.name, VAR, decl.domain, len(decl.index_sets))
    for con in ast.constraints:
        declarations[con.name] = Declaration(con.name, CONSTRAINT, None, 0)
    if ast.objective is not None:
        obj = ast.objective
        declarations[obj.name] = Declaration(obj.name, OBJECTIVE, None, 0)

    references: list[Reference] = []
    seen: set[tuple[str, int, str]] = set()

    def record(site: str, pairs: list[tuple[str, int]]) -> None:
        for name, arity in pairs:
            key = (name, arity, site)
            if key not in seen:
                seen.add(key)
                references.append(Reference(name=name, arity=arity, site=site))

    for con in ast.constraints:
        record(con.name, _statement_refs(con.quantifier, [con.left, con.right]))
    if ast.objective is not None:
        record(ast.objective.name, _statement_refs(None, [ast.objective.expr]))

    return SymbolTable(declarations=declarations, references=tuple(references))


# --- Renaming -----------------------------------------------------------------

def rename_symbols(ast: ModelAst, mapping: dict[str, str]) -> ModelAst:
    """Rename declared symbols throughout a model (quantifier binders are local
    and left untouched). Names absent from the mapping are kept."""

    def name(n: str) -> str:
        return mapping.get(n, n)

    def quant(q: Quantifier | None) -> Quantifier | None:
        if q is None:
            return None
        return Quantifier(index=q.index, over=name(q.over), where=pred(q.where))

    def pred(p: Predicate | None) -> Predicate | None:
        if p is None:
            return None
        return Predicate(tuple(Compare(c.op, expr(c.left), expr(c.right)) for c in p.parts))

    def expr(e: Expr) -> Expr:
        if isinstance(e, Num):
            return e
        if isinstance(e, Ref):
            return Ref(name=name(e.name), indices=e.indices)
        if isinstance(e, BinOp):
            return BinOp(e.op, expr(e.left), expr(e.right))
        if isinstance(e, Sum):
            return Sum(quant(e.quantifier), expr(e.body))
        raise TypeError(f"unknown expression node {type(e).__name__}")

    return ModelAst(
        sets=tuple(
            SetDecl(name(d.name), lo=d.lo, hi=d.hi, members=d.members) for d in ast.sets
        ),
        params=tuple(
            ParamDecl(name(d.name), tuple(name(s) for s in d.index_sets), d.data)
            for d in ast.params
        ),
        vars=tuple(
            VarDecl(name(d.name), tuple(name(s) for s in d.index_sets), d.domain, d.bounds)
            for d in ast.vars
        ),
        constraints=tuple(
            Constraint(name(c.name), quant(c.quantifier), expr(c.left), c.op, expr(c.right))
            for c in ast.constraints
        ),
        objective=(
            Objective(ast.objective.sense, name(ast.objective.name), expr(ast.objective.expr))
            if ast.objective is not None
            else None
        ),
    )


# --- Emission -----------------------------------------------------------------

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}

_LINGO_CMP = {"<=": "#le#", ">=": "#ge#", "<": "#lt#", ">": "#gt#", "=": "#eq#"}


def format_number(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _fmt_index(index: Index) -> str:
    if index.base is None:
        return str(index.offset)
    if index.offset == 0:
        return index.base
    if index.offset > 0:
        return f"{index.base}+{index.offset}"
    return f"{index.base}-{-index.offset}"


def _emit_expr(expr: Expr, dialect: str, parent_prec: int = 0, right_side: bool = False) -> str:
    if isinstance(expr, Num):
        return format_number(expr.value)
    if isinstance(expr, Ref):
        if not expr.indices:
            return expr.name
        inner = ",".join(_fmt_index(i) for i in expr.indices)
        if dialect == LINGO_FLAVORED:
            return f"{expr.name}({inner})"
        return f"{expr.name}[{inner}]"
    if isinstance(expr, BinOp):
        prec = _PRECEDENCE[expr.op]
        left = _emit_expr(expr.left, dialect, prec, False)
        right = _emit_expr(expr.right, dialect, prec, True)
        joiner = expr.op if expr.op in ("*", "/") else f" {expr.op} "
        text = f"{left}{joiner}{right}"
        # Parsing is left-associative, so a right child at equal precedence
        # must keep its parentheses for the round trip to be structural.
        needs_parens = prec < parent_prec or (right_side and prec == parent_prec)
        return f"({text})" if needs_parens else text
    if isinstance(expr, Sum):
        if dialect == LINGO_FLAVORED:
            header = _lingo_quantifier(expr.quantifier)
            body = _emit_expr(expr.body, dialect)
            return f"@sum({header}: {body})"
        header = _canonical_quantifier(expr.quantifier)
        body = _emit_expr(expr.body, dialect)
        return f"sum{header}({body})"
    raise UnsupportedConstruct(f"no rendering for {type(expr).__name__}")


def _canonical_predicate(pred: Predicate) -> str:
    parts = [
        f"{_emit_expr(c.left, CANONICAL)} {c.op} {_emit_expr(c.right, CANONICAL)}"
        for c in pred.parts
    ]
    return " and ".join(parts)


def _canonical_quantifier(q: Quantifier) -> str:
    text = f"{{{q.index} in {q.over}"
    if q.where is not None:
        text += f" : {_canonical_predicate(q.where)}"
    return text + "}"


def _lingo_quantifier(q: Quantifier) -> str:
    text = f"{q.over}({q.index})"
    if q.where is not None:
        comparisons = [
            f"{_emit_expr(c.left, LINGO_FLAVORED)}{_LINGO_CMP[c.op]}{_emit_expr(c.right, LINGO_FLAVORED)}"
            for c in q.where.parts
        ]
        if len(comparisons) == 1:
            text += f"|{comparisons[0]}"
        else:
            text += "|" + "#and#".join(f"({c})" for c in comparisons)
    return text


def _emit_data(data: float | tuple[float, ...]) -> str:
    if isinstance(data, tuple):
        return "[" + ", ".join(format_number(v) for v in data) + "]"
    return format_number(data)


def emit_set(decl: SetDecl) -> str:
    if decl.members is not None:
        return f"set {decl.name} = {{{', '.join(decl.members)}}};"
    return f"set {decl.name} = {decl.lo}..{decl.hi};"


def emit_param(decl: ParamDecl) -> str:
    text = f"param {decl.name}"
    if decl.index_sets:
        text += "{" + ", ".join(decl.index_sets) + "}"
    if decl.data is not None:
        text += f" = {_emit_data(decl.data)}"
    return text + ";"


def emit_var(decl: VarDecl) -> str:
    text = f"var {decl.name}"
    if decl.index_sets:
        text += "{" + ", ".join(decl.index_sets) + "}"
    text += f" {decl.domain}"
    if decl.bounds is not None:
        text += f" in [{format_number(decl.bounds[0])}, {format_number(decl.bounds[1])}]"
    return text + ";"


def emit_constraint(con: Constraint) -> str:
    text = f"con {con.name}"
    if con.quantifier is not None:
        text += _canonical_quantifier(con.quantifier)
    left = _emit_expr(con.left, CANONICAL)
    right = _emit_expr(con.right, CANONICAL)
    return f"{text}: {left} {con.op} {right};"


def emit_objective(obj: Objective) -> str:
    return f"{obj.sense} {obj.name}: {_emit_expr(obj.expr, CANONICAL)};"


def _emit_canonical(ast: ModelAst) -> str:
    lines: list[str] = []
    lines.extend(emit_set(d) for d in ast.sets)
    lines.extend(emit_param(d) for d in ast.params)
    lines.extend(emit_var(d) for d in ast.vars)
    lines.extend(emit_constraint(c) for c in ast.constraints)
    if ast.objective is not None:
        lines.append(emit_objective(ast.objective))
    return "\n".join(lines) + ("\n" if lines else "")


def _lingo_constraint(con: Constraint) -> str:
    left = _emit_expr(con.left, LINGO_FLAVORED)
    right = _emit_expr(con.right, LINGO_FLAVORED)
    body = f"{left} {con.op} {right}"
    if con.quantifier is not None:
        return f"@for({_lingo_quantifier(con.quantifier)}: {body});"
    return f"{body};"


def _lingo_domain_marker(decl: VarDecl) -> list[str]:
    # Iterates over the leading index set only; nested derived-set iteration
    # is not reproduced in the flavored dialect.
    lines = []
    marker = {"binary": "@bin", "integer": "@gin"}.get(decl.domain)
    if decl.index_sets:
        ref = f"{decl.name}(t)"
        wrap = f"{decl.index_sets[0]}(t)"
        if marker is not None:
            lines.append(f"@for({wrap}: {marker}({ref}));")
        if decl.bounds is not None and decl.domain != BINARY:
            lo, hi = decl.bounds
            lines.append(
                f"@for({wrap}: @bnd({format_number(lo)}, {ref}, {format_number(hi)}));"
            )
    else:
        if marker is not None:
            lines.append(f"{marker}({decl.name});")
        if decl.bounds is not None and decl.domain != BINARY:
            lo, hi = decl.bounds
            lines.append(f"@bnd({format_number(lo)}, {decl.name}, {format_number(hi)});")
    return lines


def _emit_lingo(ast: ModelAst) -> str:
    lines: list[str] = []
    if ast.sets:
        lines.append("sets:")
        for decl in ast.sets:
            if decl.members is not None:
                lines.append(f"{decl.name} /{' '.join(decl.members)}/;")
            else:
                lines.append(f"{decl.name} /{decl.lo}..{decl.hi}/;")
        lines.append("endsets")
    with_data = [d for d in ast.params if d.data is not None]
    without_data = [d for d in ast.params if d.data is None]
    if with_data:
        lines.append("data:")
        for decl in with_data:
            if isinstance(decl.data, tuple):
                lines.append(f"{decl.name} = {' '.join(format_number(v) for v in decl.data)};")
            else:
                lines.append(f"{decl.name} = {format_number(decl.data)};")
        lines.append("enddata")
    for decl in without_data:
        sets = "(" + ", ".join(decl.index_sets) + ")" if decl.index_sets else ""
        lines.append(f"! parameter {decl.name}{sets} supplied externally;")
    for decl in ast.vars:
        lines.extend(_lingo_domain_marker(decl))
    for con in ast.constraints:
        lines.append(_lingo_constraint(con))
    if ast.objective is not None:
        lines.append(
            f"{ast.objective.sense} = {_emit_expr(ast.objective.expr, LINGO_FLAVORED)};"
        )
    return "\n".join(lines) + ("\n" if lines else "")


def emit_model(ast: ModelAst, dialect: str = CANONICAL) -> str:
    """Emit a model as text; the canonical dialect round-trips through parse_model."""
    if dialect == CANONICAL:
        return _emit_canonical(ast)
    if dialect == LINGO_FLAVORED:
        return _emit_lingo(ast)
    raise ValueError(f"unknown dialect {dialect!r}")
