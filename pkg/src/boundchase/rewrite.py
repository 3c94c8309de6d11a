"""Compile a bounded rule ontology into an equivalent weakly acyclic one.

Every term of height at most ``H`` is written as a fixed-width tuple: the
preorder walk of its complete ``m``-ary tree of depth ``H``, where ``m`` is
the largest Skolem arity and empty tree slots hold the blank ``□``. Each
relation ``R`` gets a wide copy ``R_star`` holding these tuples; rules are
simulated on the tuples, and decoding rules allocate one null per encoded
term through the ``Map`` relation.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    Atom, Constant, Func, Instance, Rule, RuleOntology, Schema, Variable,
    is_hom_equivalent,
)
from .engine import Answer, ChaseGuard, entails_bcq, skolemize, worldview
from .textio import BLANK, is_reserved_name


class EncodingError(ValueError):
    pass


def _width(m: int, depth: int) -> int:
    """Number of slots in a complete m-ary tree of the given depth."""
    return sum(m ** i for i in range(depth + 1)) if depth >= 0 else 0


def _preorder_depths(m: int, depth: int) -> list:
    if depth == 0:
        return [0]
    child = [d + 1 for d in _preorder_depths(m, depth - 1)]
    return [0] + child * m


@dataclass(frozen=True)
class EncodingParams:
    height: int
    m: int
    ell: int
    s: int
    func_constants: dict = field(default_factory=dict)
    blank: Constant = BLANK

    @classmethod
    def build(cls, height: int, symbols=()) -> "EncodingParams":
        symbols = list(dict.fromkeys(symbols))
        m = max((s.arity for s in symbols), default=0)
        ell = _width(m, height)
        s = (ell - 1) // m if m else 0
        consts = {sym: Constant("$" + sym.name) for sym in symbols}
        return cls(height, m, ell, s, consts)

    @property
    def symbol_of(self) -> dict:
        return {c: sym for sym, c in self.func_constants.items()}

    def width(self, depth: int) -> int:
        return _width(self.m, depth)

    def slot_depths(self) -> list:
        return _preorder_depths(self.m, self.height)


# ----------------------------------------------------------------------
# Normal form
# ----------------------------------------------------------------------

def _fresh(base: str, taken) -> str:
    name = base
    n = 1
    while name in taken:
        n += 1
        name = f"{base}{n}"
    return name


def normalize(o: RuleOntology):
    """Make ``o`` normal by reading database relations through copy rules.

    Returns the new ontology and a map from each renamed database relation
    to the name its input facts must now carry.
    """
    heads = o.head_relations
    clash = [r for r in o.db_schema if r in o.query_schema or r in heads]
    if not clash:
        return o, {}
    taken = set(o.schema)
    renames, copies = {}, []
    for r in sorted(clash):
        new = _fresh(f"{r}_in", taken)
        taken.add(new)
        renames[r] = new
        xs = tuple(Variable(f"X{i}") for i in range(1, o.db_schema[r] + 1))
        copies.append(Rule((Atom(new, xs),), (Atom(r, xs),)))
    db = Schema((renames.get(r, r), a) for r, a in o.db_schema.items())
    return RuleOntology(tuple(copies) + o.rules, db, o.query_schema), renames


def rename_facts(d: Instance, renames: dict) -> Instance:
    return Instance(Atom(renames.get(a.relation, a.relation), a.terms) for a in d.facts)


# ----------------------------------------------------------------------
# Term encoding
# ----------------------------------------------------------------------

def encode_term(t, p: EncodingParams) -> tuple:
    out = []
    _encode(t, p.height, p, out)
    return tuple(out)


def _encode(t, depth, p, out):
    if type(t) is Func:
        if t.symbol not in p.func_constants:
            raise EncodingError(f"no constant for function symbol {t.symbol.name}")
        if t.args and depth == 0:
            raise EncodingError(f"term {t} does not fit in {p.ell} slots")
        out.append(p.func_constants[t.symbol])
        child = p.width(depth - 1)
        for j in range(p.m):
            if j < len(t.args):
                _encode(t.args[j], depth - 1, p, out)
            else:
                out.extend([p.blank] * child)
    elif type(t) is Variable:
        raise EncodingError(f"cannot encode the variable {t}")
    else:
        out.append(t)
        out.extend([p.blank] * (p.width(depth) - 1))


def decode_tuple(tu, p: EncodingParams):
    tu = tuple(tu)
    if len(tu) != p.ell:
        raise EncodingError(f"expected {p.ell} symbols, got {len(tu)}")
    return _decode(tu, 0, p.height, p, p.symbol_of)


def _decode(tu, pos, depth, p, symbol_of):
    head = tu[pos]
    if head == p.blank:
        raise EncodingError(f"blank at the root of a term (slot {pos + 1})")
    sym = symbol_of.get(head)
    if sym is None:
        rest = tu[pos + 1:pos + p.width(depth)]
        if any(x != p.blank for x in rest):
            raise EncodingError(f"symbols below the constant {head}")
        return head
    if sym.arity and depth == 0:
        raise EncodingError(f"no room for the arguments of {sym.name}")
    child = p.width(depth - 1)
    args = []
    at = pos + 1
    for j in range(p.m):
        if j < sym.arity:
            args.append(_decode(tu, at, depth - 1, p, symbol_of))
        elif any(x != p.blank for x in tu[at:at + child]):
            raise EncodingError(f"extra argument for {sym.name}")
        at += child
    return Func(sym, tuple(args))


def encode_atom(a: Atom, p: EncodingParams, symbol_map: dict) -> Atom:
    terms = []
    for t in a.terms:
        terms.extend(encode_term(t, p))
    return Atom(symbol_map[a.relation], tuple(terms))


# ----------------------------------------------------------------------
# Rule synthesis
# ----------------------------------------------------------------------

def _expand(v: Variable, i: int) -> Variable:
    return Variable(f"{v.name}_{i}")


def _full(v: Variable, p) -> tuple:
    return tuple(_expand(v, i) for i in range(1, p.ell + 1))


def _narrow(v: Variable, p) -> tuple:
    """Encoding of a term of height < H: variables above the leaf level."""
    out, i = [], 0
    for d in p.slot_depths():
        if d < p.height:
            i += 1
            out.append(_expand(v, i))
        else:
            out.append(p.blank)
    return tuple(out)


def tau(t, rule: Rule, p: EncodingParams, rule_index: Optional[int] = None) -> tuple:
    """The ``ell``-wide pattern standing for term ``t`` of ``rule``.

    ``rule_index`` (1-based) names the Skolem constants of existentials.
    """
    if type(t) is not Variable:
        return encode_term(t, p)
    if not rule.existentials or t in rule.body_variables and t not in rule.frontier:
        return _full(t, p)
    if t in rule.frontier:
        return _narrow(t, p)
    fr = rule.frontier
    sym = next((s for s in p.func_constants
                if s.name == f"sk_{rule_index}_{t.name}" and s.arity == len(fr)), None)
    if sym is None:
        raise EncodingError(f"no Skolem symbol for {t} in rule {rule_index}")
    out = [p.func_constants[sym]]
    for x in fr:
        out.extend(_expand(x, i) for i in range(1, p.s + 1))
    out.extend([p.blank] * (p.ell - len(out)))
    return tuple(out)


def _star_atom(a: Atom, rule, p, rule_index, symbol_map):
    terms = []
    for t in a.terms:
        terms.extend(tau(t, rule, p, rule_index))
    return Atom(symbol_map[a.relation], tuple(terms))


@dataclass(frozen=True)
class RewriteOutput:
    ontology: RuleOntology
    symbol_map: dict
    params: EncodingParams
    dom_relation: Optional[str] = None
    map_relation: Optional[str] = None

    def starred(self, inst: Instance) -> Instance:
        """The facts of ``inst`` over the starred relations."""
        names = set(self.symbol_map.values())
        return Instance(a for a in inst.facts if a.relation in names)

    def encode_instance(self, inst: Instance) -> Instance:
        return Instance(encode_atom(a, self.params, self.symbol_map) for a in inst.facts)


def _var_base(avoid) -> str:
    for base in ("V", "W", "U"):
        if not any(re.fullmatch(base + r"[0-9]+", n) for n in avoid):
            return base
    return "Vv"


def build_rewrite(o: RuleOntology, height: int) -> RewriteOutput:
    """Build the weakly acyclic simulation of the normal ontology ``o``.

    ``height`` must bound the height of every chase of ``o``; this is not
    re-checked here.
    """
    if not o.is_normal:
        raise ValueError("build_rewrite needs a normal ontology; call normalize first")
    reserved = sorted(c.name for c in o.constants() if is_reserved_name(c.name))
    if reserved:
        raise EncodingError(f"reserved constants in input ontology: {', '.join(reserved)}")
    sk = skolemize(o)
    symbols = [s for r in sk for s in r.symbols]
    p = EncodingParams.build(height, symbols)
    if p.m == 0:
        return RewriteOutput(o, {}, p)
    if height < 1:
        raise ValueError("height 0 cannot encode functional terms")

    taken = set(o.schema)
    symbol_map = {}
    for r in o.schema:
        symbol_map[r] = _fresh(f"{r}_star", taken)
        taken.add(symbol_map[r])
    dom = _fresh("Dom_star", taken)
    taken.add(dom)
    mapr = _fresh("Map", taken)
    taken.add(mapr)
    nullary = [s for s in symbols if s.arity == 0]
    const_rel = None
    if nullary:
        const_rel = _fresh("Const_star", taken)
        taken.add(const_rel)

    blanks = (p.blank,) * (p.ell - 1)
    rules = []

    # copy database facts into the starred relations
    for r, n in o.db_schema.items():
        xs = [Variable(f"X{i}") for i in range(1, n + 1)]
        wide = tuple(t for x in xs for t in (x,) + blanks)
        rules.append(Rule((Atom(r, tuple(xs)),), (Atom(symbol_map[r], wide),)))

    # simulation of each rule on encoded terms
    for i, rule in enumerate(o.rules, start=1):
        body = [_star_atom(a, rule, p, i, symbol_map) for a in rule.body]
        head = [_star_atom(a, rule, p, i, symbol_map) for a in rule.head]
        rules.append(Rule(tuple(body), tuple(head)))

    # collect encoded terms of query relations
    for r, n in o.query_schema.items():
        if n == 0:
            continue
        vs = [tuple(Variable(f"A{k}_{j}") for j in range(1, p.ell + 1))
              for k in range(1, n + 1)]
        body = Atom(symbol_map[r], tuple(t for v in vs for t in v))
        rules.append(Rule((body,), tuple(Atom(dom, v) for v in vs)))

    # one null per encoded functional term
    for rule_sk in sk:
        for sym in rule_sk.symbols:
            if sym.arity == 0:
                continue
            z = next(v for v in o.rules[rule_sk.index - 1].existentials
                     if f"sk_{rule_sk.index}_{v.name}" == sym.name)
            base = _var_base([z.name])
            vs = tuple(Variable(f"{base}{j}") for j in range(1, p.ell))
            fc = p.func_constants[sym]
            rules.append(Rule((Atom(dom, (fc,) + vs),),
                              (Atom(mapr, (fc,) + vs + (z,)),)))
    for sym in nullary:
        z = Variable("Z")
        fc = p.func_constants[sym]
        rules.append(Rule((Atom(dom, (fc,) + blanks),),
                          (Atom(mapr, (fc,) + blanks + (z,)),)))

    # single-symbol tuples decode to themselves
    x = Variable("X")
    zeta_body = [Atom(dom, (x,) + blanks)]
    if const_rel:
        zeta_body.append(Atom(const_rel, (x,)))
    rules.append(Rule(tuple(zeta_body), (Atom(mapr, (x,) + blanks + (x,)),)))
    if const_rel:
        for r, n in o.db_schema.items():
            xs = tuple(Variable(f"X{i}") for i in range(1, n + 1))
            for xi in xs:
                rules.append(Rule((Atom(r, xs),), (Atom(const_rel, (xi,)),)))
        for c in sorted(o.constants(), key=lambda c: c.name):
            rules.append(Rule((), (Atom(const_rel, (c,)),)))

    # decode query relations
    for r, n in o.query_schema.items():
        vs = [tuple(Variable(f"A{k}_{j}") for j in range(1, p.ell + 1))
              for k in range(1, n + 1)]
        xs = tuple(Variable(f"X{k}") for k in range(1, n + 1))
        body = [Atom(symbol_map[r], tuple(t for v in vs for t in v))]
        body += [Atom(mapr, v + (xk,)) for v, xk in zip(vs, xs)]
        rules.append(Rule(tuple(body), (Atom(r, xs),)))

    out = RuleOntology(tuple(rules), o.db_schema, o.query_schema)
    return RewriteOutput(out, symbol_map, p, dom, mapr)


# ----------------------------------------------------------------------
# Equivalence
# ----------------------------------------------------------------------

def verify_equivalence(o1: RuleOntology, o2: RuleOntology, d: Instance,
                       queries=None, guard: Optional[ChaseGuard] = None) -> bool:
    """Check that both ontologies give hom-equivalent worldviews on ``d``.

    Supplied queries are also answered on both sides as a cross-check.
    Raises :class:`~boundchase.engine.GuardExhausted` if a chase stops early.
    """
    guard = guard or ChaseGuard.none()
    w1 = worldview(o1, d, guard)
    w2 = worldview(o2, d, guard)
    if not is_hom_equivalent(w1, w2):
        return False
    for q in queries or ():
        a1 = entails_bcq(d, o1, q, guard)
        a2 = entails_bcq(d, o2, q, guard)
        if a1 is not a2 or a1 is Answer.UNKNOWN:
            return False
    return True


def write_symbol_map(symbol_map: dict) -> str:
    return "".join(f"{r} -> {s}\n" for r, s in sorted(symbol_map.items()))
