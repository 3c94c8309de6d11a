"""Text format for ontologies, fact sets and Boolean conjunctive queries.

Ontology files::

    # Example
    @database R/2
    @query R/2
    R(X,X) -> exists Y,Z . S(X,Y), S(Y,Z).
    -> P(c).

Variables start with an uppercase letter. Constants are lowercase
identifiers, digit strings or double-quoted strings. ``_:n`` is a labeled
null and ``f(t, ...)`` with a lowercase ``f`` is a functional term (facts
only). The tokens ``*``, ``□`` and ``$name`` are reserved constants used by
the critical database and the rewriting; user-written quoted strings may
not spell them.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    ArityError, Atom, Constant, Func, Instance, Null, Rule, RuleOntology,
    Schema, SkolemSymbol, Variable, atom_key, instance_height, sort_atoms,
)

STAR = Constant("*")
BLANK = Constant("□")


def is_reserved_name(name: str) -> bool:
    return name in ("*", "□") or name.startswith("$")


class ParseError(ValueError):
    def __init__(self, message, line=None, col=None):
        self.message = message
        self.line = line
        self.col = col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + message)


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow>->)
  | (?P<neck>:-)
  | (?P<decl>@[A-Za-z]+)
  | (?P<null>_:[A-Za-z0-9_]+)
  | (?P<reserved>\$[A-Za-z0-9_]+|\*|□)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<punct>[(),./?])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        chunk = m.group()
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text, *, allow_functions=False, allow_nulls=False,
                 allow_variables=True, forbid_star=False):
        self.toks = tokenize(text)
        self.i = 0
        self.allow_functions = allow_functions
        self.allow_nulls = allow_nulls
        self.allow_variables = allow_variables
        self.forbid_star = forbid_star
        self.arities = {}
        self.func_arities = {}

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def at(self, kind, text=None):
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind, text=None):
        if not self.at(kind, text):
            want = repr(text) if text else kind
            got = repr(self.tok.text) if self.tok.kind != "eof" else "end of input"
            raise self.error(f"expected {want}, found {got}")
        t = self.tok
        self.i += 1
        return t

    def accept(self, kind, text=None):
        if self.at(kind, text):
            t = self.tok
            self.i += 1
            return t
        return None

    # -- terms and atoms ------------------------------------------------

    def term(self):
        t = self.tok
        if t.kind == "name":
            self.i += 1
            if t.text[0].isupper():
                if not self.allow_variables:
                    raise self.error(f"variable {t.text} in a ground context", t)
                return Variable(t.text)
            if t.text[0] == "_":
                raise self.error(f"invalid term {t.text!r}", t)
            if self.at("punct", "("):
                return self.func(t)
            return Constant(t.text)
        if t.kind == "int":
            self.i += 1
            return Constant(t.text)
        if t.kind == "string":
            self.i += 1
            name = json.loads(t.text)
            if is_reserved_name(name):
                raise self.error(f"constant {name!r} uses a reserved name", t)
            return Constant(name)
        if t.kind == "reserved":
            self.i += 1
            if t.text == "*" and self.forbid_star:
                raise self.error("the constant '*' is reserved", t)
            if t.text.startswith("$") and self.at("punct", "("):
                raise self.error("reserved constants cannot take arguments", t)
            return Constant(t.text)
        if t.kind == "null":
            if not self.allow_nulls:
                raise self.error(f"null {t.text} not allowed here", t)
            self.i += 1
            return Null(t.text[2:])
        raise self.error(f"expected a term, found {t.text!r}")

    def func(self, name_tok):
        if not self.allow_functions:
            raise self.error(
                f"functional term {name_tok.text}(...) not allowed here", name_tok)
        self.expect("punct", "(")
        args = []
        if not self.accept("punct", ")"):
            args.append(self.term())
            while self.accept("punct", ","):
                args.append(self.term())
            self.expect("punct", ")")
        arity = self.func_arities.setdefault(name_tok.text, len(args))
        if arity != len(args):
            raise self.error(
                f"function {name_tok.text} used with arities {arity} and {len(args)}",
                name_tok)
        return Func(SkolemSymbol(name_tok.text, len(args)), tuple(args))

    def atom(self):
        t = self.expect("name")
        terms = []
        if self.accept("punct", "("):
            terms.append(self.term())
            while self.accept("punct", ","):
                terms.append(self.term())
            self.expect("punct", ")")
        self.check_arity(t.text, len(terms), t)
        return Atom(t.text, tuple(terms)), t

    def check_arity(self, name, arity, tok):
        known = self.arities.setdefault(name, arity)
        if known != arity:
            raise self.error(
                f"relation {name} used with arity {arity} but has arity {known}", tok)

    def atom_list(self):
        atoms = [self.atom()]
        while self.accept("punct", ","):
            atoms.append(self.atom())
        return atoms


# ----------------------------------------------------------------------
# Ontologies
# ----------------------------------------------------------------------

@dataclass
class SourceOntology:
    """A parsed ontology plus the source position of each rule."""
    ontology: RuleOntology
    rule_locations: list = field(default_factory=list)


def parse_ontology(text: str) -> SourceOntology:
    p = _Parser(text, forbid_star=True)
    rules, locations = [], []
    db, query = [], []
    while not p.at("eof"):
        if p.at("decl"):
            tok = p.expect("decl")
            if tok.text not in ("@database", "@query"):
                raise p.error(f"unknown declaration {tok.text}", tok)
            target = db if tok.text == "@database" else query
            target.append(_relsig(p))
            while p.accept("punct", ","):
                target.append(_relsig(p))
            continue
        start = p.tok
        rules.append(_rule(p))
        locations.append((start.line, start.col))
    try:
        ontology = RuleOntology(tuple(rules), Schema(db), Schema(query))
    except ArityError as exc:
        raise ParseError(str(exc)) from None
    return SourceOntology(ontology, locations)


def _relsig(p):
    name = p.expect("name")
    p.expect("punct", "/")
    arity = int(p.expect("int").text)
    p.check_arity(name.text, arity, name)
    return (name.text, arity)


def _rule(p):
    start = p.tok
    body = []
    if not p.at("arrow"):
        body = p.atom_list()
    p.expect("arrow")
    declared = []
    if p.at("name", "exists") and p.peek().kind == "name" and p.peek().text[0].isupper():
        p.expect("name")
        declared.append(p.expect("name"))
        while p.accept("punct", ","):
            declared.append(p.expect("name"))
        p.expect("punct", ".")
    head = p.atom_list()
    p.expect("punct", ".")

    body_vars = {v for a, _ in body for v in a.variables()}
    head_vars = {v for a, _ in head for v in a.variables()}
    exists = []
    for tok in declared:
        v = Variable(tok.text)
        if not tok.text[0].isupper():
            raise p.error(f"{tok.text} is not a variable", tok)
        if v in body_vars:
            raise p.error(f"existential variable {v} also occurs in the body", tok)
        if v not in head_vars:
            raise p.error(f"existential variable {v} does not occur in the head", tok)
        exists.append(v)
    for a, tok in head:
        for v in a.variables():
            if v not in body_vars and v not in exists:
                raise p.error(
                    f"head variable {v} is neither in the body nor declared with exists",
                    tok)
    try:
        return Rule(tuple(a for a, _ in body), tuple(a for a, _ in head))
    except ValueError as exc:
        raise ParseError(str(exc), start.line, start.col) from None


# ----------------------------------------------------------------------
# Facts and queries
# ----------------------------------------------------------------------

def parse_facts(text: str) -> Instance:
    """Parse ground atoms, each terminated by '.'; duplicates collapse."""
    p = _Parser(text, allow_functions=True, allow_nulls=True, allow_variables=False)
    facts = []
    while not p.at("eof"):
        a, _ = p.atom()
        p.expect("punct", ".")
        facts.append(a)
    return Instance(facts)


@dataclass(frozen=True)
class QueryDoc:
    """A Boolean conjunctive query; every variable is existential."""
    atoms: tuple

    def __post_init__(self):
        object.__setattr__(self, "atoms", sort_atoms(self.atoms))
        Schema.of_atoms(self.atoms)

    @property
    def schema(self) -> Schema:
        return Schema.of_atoms(self.atoms)

    def __str__(self):
        return print_query(self)


def parse_query(text: str, schema: Optional[Schema] = None) -> QueryDoc:
    p = _Parser(text)
    p.expect("punct", "?")
    p.expect("neck")
    atoms = p.atom_list()
    p.expect("punct", ".")
    p.expect("eof")
    if schema is not None:
        for a, tok in atoms:
            if schema.get(a.relation) != a.arity:
                raise p.error(
                    f"relation {a.relation}/{a.arity} is not in the query schema", tok)
    return QueryDoc(tuple(a for a, _ in atoms))


# ----------------------------------------------------------------------
# Printing
# ----------------------------------------------------------------------

_PLAIN_CONST = re.compile(r"[a-z][A-Za-z0-9_]*|[0-9]+|\$[A-Za-z0-9_]+|\*|□")


def print_term(t) -> str:
    tp = type(t)
    if tp is Constant:
        if _PLAIN_CONST.fullmatch(t.name):
            return t.name
        return json.dumps(t.name, ensure_ascii=False)
    if tp is Variable:
        return t.name
    if tp is Null:
        return "_:" + t.name
    return f"{t.symbol.name}({','.join(print_term(a) for a in t.args)})"


def print_atom(a: Atom) -> str:
    if not a.terms:
        return a.relation
    return f"{a.relation}({','.join(print_term(t) for t in a.terms)})"


def print_rule(r: Rule) -> str:
    body = ", ".join(print_atom(a) for a in r.body)
    head = ", ".join(print_atom(a) for a in r.head)
    exists = ""
    if r.existentials:
        names = sorted(v.name for v in r.existentials)
        exists = f"exists {','.join(names)} . "
    lead = f"{body} -> " if body else "-> "
    return f"{lead}{exists}{head}."


def _print_schema(keyword, schema):
    if not schema:
        return []
    sigs = ", ".join(f"{n}/{a}" for n, a in sorted(schema.items()))
    return [f"{keyword} {sigs}"]


def print_ontology(o) -> str:
    if isinstance(o, SourceOntology):
        o = o.ontology
    lines = _print_schema("@database", o.db_schema)
    lines += _print_schema("@query", o.query_schema)
    lines += [print_rule(r) for r in o.rules]
    return "".join(line + "\n" for line in lines)


def print_instance(inst) -> str:
    facts = inst.facts if isinstance(inst, Instance) else inst
    return "".join(print_atom(a) + ".\n" for a in sorted(facts, key=atom_key))


def print_query(q: QueryDoc) -> str:
    return "? :- " + ", ".join(print_atom(a) for a in q.atoms) + "."


# ----------------------------------------------------------------------
# Result output
# ----------------------------------------------------------------------

def chase_result_record(result) -> dict:
    inst = result.instance
    record = {
        "status": result.status.value,
        "stages": result.stages,
        "fact_count": len(inst),
        "max_height": instance_height(inst),
        "facts": [print_atom(a) for a in inst.sorted()],
    }
    if result.witness is not None:
        record["witness"] = print_term(result.witness)
    return record


def format_record(record: dict, fmt: str = "text") -> str:
    """Render a result record as ``key: value`` lines or as JSON."""
    if fmt == "json":
        return json.dumps(record, indent=2, ensure_ascii=False) + "\n"
    lines = []
    for key, value in record.items():
        if isinstance(value, list):
            lines.append(f"{key}:")
            lines.extend(f"  {v}" for v in value)
        else:
            lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"
