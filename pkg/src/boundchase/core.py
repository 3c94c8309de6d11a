"""Terms, atoms, rules, ontologies and instances, plus homomorphism search.

All values are immutable. Terms and atoms carry a canonical total order
(:func:`term_key`, :func:`atom_key`) that fixes every printed and iterated
order in the package.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union


class ArityError(ValueError):
    """A relation or function symbol is used with two different arities."""


# ----------------------------------------------------------------------
# Terms
# ----------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Constant:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Null:
    """A labeled null of a general database (``_:name`` in text)."""
    name: str

    def __str__(self):
        return "_:" + self.name


@dataclass(frozen=True, slots=True)
class SkolemSymbol:
    name: str
    arity: int


@dataclass(frozen=True, slots=True)
class Func:
    """A functional term ``f(t1, ..., tn)``; nulls of the Skolem chase."""
    symbol: SkolemSymbol
    args: tuple
    ground: bool = field(init=False, repr=False, compare=False)
    height: int = field(init=False, repr=False, compare=False)
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        args = tuple(self.args)
        if len(args) != self.symbol.arity:
            raise ArityError(
                f"function {self.symbol.name}/{self.symbol.arity} "
                f"applied to {len(args)} arguments")
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "ground", all(is_ground(a) for a in args))
        object.__setattr__(
            self, "height", 1 + max((_raw_height(a) for a in args), default=0))
        object.__setattr__(self, "_hash", hash((self.symbol, args)))

    def __hash__(self):
        return self._hash

    def __str__(self):
        return f"{self.symbol.name}({','.join(map(str, self.args))})"


Term = Union[Constant, Variable, Null, Func]

_TAG = {Constant: 0, Null: 1, Func: 2, Variable: 3}


def _raw_height(t) -> int:
    return t.height if type(t) is Func else 0


def is_ground(t) -> bool:
    tp = type(t)
    if tp is Variable:
        return False
    if tp is Func:
        return t.ground
    return True


def term_key(t) -> tuple:
    """Sort key: constructor tag, then name, then arguments."""
    if type(t) is Func:
        return (2, t.symbol.name, tuple(term_key(a) for a in t.args))
    return (_TAG[type(t)], t.name, ())


def term_height(t) -> int:
    """Nesting depth of function symbols in a ground term.

    Constants and nulls have height 0; a nullary functional term has height 1.
    """
    if not is_ground(t):
        raise ValueError(f"term_height needs a ground term, got {t}")
    return _raw_height(t)


def term_variables(t) -> Iterator[Variable]:
    tp = type(t)
    if tp is Variable:
        yield t
    elif tp is Func:
        for a in t.args:
            yield from term_variables(a)


def subterms(t) -> Iterator:
    yield t
    if type(t) is Func:
        for a in t.args:
            yield from subterms(a)


# ----------------------------------------------------------------------
# Atoms, schemas
# ----------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Atom:
    relation: str
    terms: tuple = ()
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "_hash", hash((self.relation, terms)))

    def __hash__(self):
        return self._hash

    @property
    def arity(self) -> int:
        return len(self.terms)

    @property
    def is_ground(self) -> bool:
        return all(is_ground(t) for t in self.terms)

    def variables(self) -> Iterator[Variable]:
        for t in self.terms:
            yield from term_variables(t)

    def __str__(self):
        if not self.terms:
            return self.relation
        return f"{self.relation}({','.join(map(str, self.terms))})"


def atom_key(a: Atom) -> tuple:
    return (a.relation, len(a.terms), tuple(term_key(t) for t in a.terms))


def sort_atoms(atoms: Iterable[Atom]) -> tuple:
    return tuple(sorted(set(atoms), key=atom_key))


class Schema(Mapping):
    """A finite set of relation symbols, each with exactly one arity."""

    __slots__ = ("_arities",)

    def __init__(self, pairs=()):
        arities = {}
        items = pairs.items() if isinstance(pairs, Mapping) else pairs
        for name, arity in items:
            if arities.setdefault(name, arity) != arity:
                raise ArityError(
                    f"relation {name} declared with arities "
                    f"{arities[name]} and {arity}")
        self._arities = dict(sorted(arities.items()))

    @classmethod
    def of_atoms(cls, atoms: Iterable[Atom]) -> "Schema":
        return cls((a.relation, a.arity) for a in atoms)

    def __getitem__(self, name):
        return self._arities[name]

    def __iter__(self):
        return iter(self._arities)

    def __len__(self):
        return len(self._arities)

    def __eq__(self, other):
        if isinstance(other, Schema):
            return self._arities == other._arities
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self._arities.items()))

    def __repr__(self):
        return f"Schema({self._arities!r})"

    def union(self, *others) -> "Schema":
        pairs = list(self.items())
        for o in others:
            pairs.extend(o.items())
        return Schema(pairs)

    def without(self, names) -> "Schema":
        names = set(names)
        return Schema((n, a) for n, a in self.items() if n not in names)


# ----------------------------------------------------------------------
# Rules and ontologies
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Rule:
    """An existential rule ``body -> exists Z . head``.

    Body and head are stored deduplicated in canonical order, so two rules
    are equal iff their atom sets are. An empty body is allowed.
    """
    body: tuple
    head: tuple

    def __post_init__(self):
        object.__setattr__(self, "body", sort_atoms(self.body))
        object.__setattr__(self, "head", sort_atoms(self.head))
        if not self.head:
            raise ValueError("rule head must not be empty")
        for a in self.body + self.head:
            for t in a.terms:
                if type(t) is Func or type(t) is Null:
                    raise ValueError(f"rules may not contain the term {t}")

    @cached_property
    def body_variables(self) -> tuple:
        return _ordered_vars(self.body)

    @cached_property
    def head_variables(self) -> tuple:
        return _ordered_vars(self.head)

    @cached_property
    def frontier(self) -> tuple:
        """Variables shared by body and head, ordered by first body occurrence."""
        hv = set(self.head_variables)
        return tuple(v for v in self.body_variables if v in hv)

    @cached_property
    def existentials(self) -> tuple:
        bv = set(self.body_variables)
        return tuple(v for v in self.head_variables if v not in bv)

    @cached_property
    def variables(self) -> tuple:
        seen = dict.fromkeys(self.body_variables)
        seen.update(dict.fromkeys(self.head_variables))
        return tuple(seen)

    def constants(self) -> set:
        return {t for a in self.body + self.head for t in a.terms
                if type(t) is Constant}

    def __str__(self):
        from .textio import print_rule
        return print_rule(self)


def _ordered_vars(atoms) -> tuple:
    seen = {}
    for a in atoms:
        for v in a.variables():
            seen.setdefault(v, None)
    return tuple(seen)


def rename_apart(rules: Sequence[Rule]) -> tuple:
    """Rename variables so no variable name is shared by two rules.

    A variable clashing with an earlier rule becomes ``<name>_<rule index>``
    (1-based), with further suffixes if that is taken. Idempotent.
    """
    used: set = set()
    out = []
    for idx, rule in enumerate(rules, start=1):
        names = {v.name for v in rule.variables}
        mapping = {}
        taken = used | names
        for v in rule.variables:
            if v.name not in used:
                continue
            new = f"{v.name}_{idx}"
            while new in taken:
                new += "_"
            taken.add(new)
            mapping[v] = Variable(new)
        if mapping:
            rule = Rule(apply_substitution(mapping, rule.body),
                        apply_substitution(mapping, rule.head))
        used.update(v.name for v in rule.variables)
        out.append(rule)
    return tuple(out)


@dataclass(frozen=True)
class RuleOntology:
    """A rule set with database schema D and query schema Q."""
    rules: tuple
    db_schema: Schema = field(default_factory=Schema)
    query_schema: Schema = field(default_factory=Schema)

    def __post_init__(self):
        object.__setattr__(self, "rules", rename_apart(tuple(self.rules)))
        # raises ArityError on any inconsistency
        object.__setattr__(self, "schema", self.db_schema.union(
            self.query_schema,
            Schema.of_atoms(a for r in self.rules for a in r.body + r.head)))

    @property
    def head_relations(self) -> set:
        return {a.relation for r in self.rules for a in r.head}

    @property
    def is_normal(self) -> bool:
        if set(self.db_schema) & set(self.query_schema):
            return False
        return not (set(self.db_schema) & self.head_relations)

    @property
    def rule_schema(self) -> Schema:
        return Schema.of_atoms(a for r in self.rules for a in r.body + r.head)

    def constants(self) -> set:
        out = set()
        for r in self.rules:
            out |= r.constants()
        return out


# ----------------------------------------------------------------------
# Instances
# ----------------------------------------------------------------------

class Instance:
    """A finite set of ground atoms."""

    def __init__(self, facts: Iterable[Atom] = ()):
        facts = frozenset(facts)
        for a in facts:
            if not a.is_ground:
                raise ValueError(f"instance facts must be ground: {a}")
        Schema.of_atoms(facts)
        self.facts = facts

    def __iter__(self):
        return iter(self.sorted())

    def __len__(self):
        return len(self.facts)

    def __contains__(self, atom):
        return atom in self.facts

    def __eq__(self, other):
        if isinstance(other, Instance):
            return self.facts == other.facts
        return NotImplemented

    def __hash__(self):
        return hash(self.facts)

    def __repr__(self):
        return f"Instance({{{', '.join(map(str, self.sorted()))}}})"

    def sorted(self) -> tuple:
        return tuple(sorted(self.facts, key=atom_key))

    @cached_property
    def index(self) -> "FactIndex":
        return FactIndex(self.facts)

    @property
    def schema(self) -> Schema:
        return Schema.of_atoms(self.facts)

    def terms(self) -> set:
        """Every term occurrence, including nested subterms."""
        return {s for a in self.facts for t in a.terms for s in subterms(t)}

    def active_domain(self) -> set:
        return {t for t in self.terms() if type(t) is Constant}

    def nulls(self) -> set:
        return {t for t in self.terms() if type(t) in (Null, Func)}


def instance_height(inst) -> int:
    facts = inst.facts if isinstance(inst, Instance) else inst
    return max((_raw_height(t) for a in facts for t in a.terms), default=0)


def restrict_to_schema(inst: Instance, schema) -> Instance:
    names = set(schema)
    return Instance(a for a in inst.facts if a.relation in names)


# ----------------------------------------------------------------------
# Substitutions and homomorphisms
# ----------------------------------------------------------------------

Substitution = Mapping


def _subst_term(h, t):
    tp = type(t)
    if tp is Constant:
        return t
    if tp is Func:
        if t in h:
            return h[t]
        if t.ground and not t.args:
            return t
        return Func(t.symbol, tuple(_subst_term(h, a) for a in t.args))
    return h.get(t, t)


def apply_substitution(h: Substitution, x):
    """Apply ``h`` to a term, an atom, or an iterable of atoms."""
    if isinstance(x, Atom):
        return Atom(x.relation, tuple(_subst_term(h, t) for t in x.terms))
    if isinstance(x, (Constant, Variable, Null, Func)):
        return _subst_term(h, x)
    if isinstance(x, Instance):
        return Instance(apply_substitution(h, a) for a in x.facts)
    if isinstance(x, (set, frozenset)):
        return type(x)(apply_substitution(h, a) for a in x)
    return tuple(apply_substitution(h, a) for a in x)


class FactIndex:
    """Facts indexed by relation and by (relation, position, term)."""

    def __init__(self, facts=()):
        self.facts = set()
        self.by_rel = {}
        self.by_pos = {}
        for a in facts:
            self.add(a)

    def add(self, atom) -> bool:
        if atom in self.facts:
            return False
        self.facts.add(atom)
        self.by_rel.setdefault(atom.relation, []).append(atom)
        for i, t in enumerate(atom.terms):
            self.by_pos.setdefault((atom.relation, i, t), []).append(atom)
        return True

    def __len__(self):
        return len(self.facts)


def _mappable(t) -> bool:
    tp = type(t)
    return tp is Variable or tp is Null or (tp is Func and t.ground)


def _match_term(p, v, h, trail) -> bool:
    tp = type(p)
    if tp is Constant:
        return p == v
    if tp is Variable or tp is Null or p.ground:
        cur = h.get(p)
        if cur is None:
            h[p] = v
            trail.append(p)
            return True
        return cur == v
    # non-ground functional pattern: match structurally
    if type(v) is not Func or v.symbol != p.symbol:
        return False
    return all(_match_term(pa, va, h, trail) for pa, va in zip(p.args, v.args))


def _bound_value(p, h):
    tp = type(p)
    if tp is Constant:
        return p
    if _mappable(p):
        return h.get(p)
    return None


def _candidates(atom, h, index):
    best = None
    for i, p in enumerate(atom.terms):
        val = _bound_value(p, h)
        if val is not None:
            lst = index.by_pos.get((atom.relation, i, val), ())
            if best is None or len(lst) < len(best):
                best = lst
                if not best:
                    return best
    if best is None:
        best = index.by_rel.get(atom.relation, ())
    return best


def iter_homomorphisms(src: Iterable[Atom], dst, partial=None) -> Iterator[dict]:
    """Yield every substitution ``h`` extending ``partial`` with h(src) ⊆ dst.

    Variables, nulls and ground functional terms of ``src`` are mappable;
    constants are fixed. ``dst`` is an :class:`Instance`, a :class:`FactIndex`
    or an iterable of ground atoms. Atoms are matched most-constrained first.
    """
    if isinstance(dst, Instance):
        index = dst.index
    elif isinstance(dst, FactIndex):
        index = dst
    else:
        index = FactIndex(dst)
    atoms = list(dict.fromkeys(src))
    h = dict(partial or {})
    yield from _search(atoms, h, index)


def _search(remaining, h, index):
    if not remaining:
        yield dict(h)
        return
    best_i, best_c = 0, None
    for i, atom in enumerate(remaining):
        cands = _candidates(atom, h, index)
        if best_c is None or len(cands) < len(best_c):
            best_i, best_c = i, cands
            if not cands:
                return
    atom = remaining[best_i]
    rest = remaining[:best_i] + remaining[best_i + 1:]
    n = len(atom.terms)
    for fact in list(best_c):
        if len(fact.terms) != n:
            continue
        trail = []
        if all(_match_term(p, v, h, trail) for p, v in zip(atom.terms, fact.terms)):
            yield from _search(rest, h, index)
        for k in trail:
            del h[k]


def find_homomorphism(src: Iterable[Atom], dst) -> Optional[dict]:
    """Return one homomorphism from ``src`` into ``dst``, or ``None``."""
    return next(iter_homomorphisms(src, dst), None)


def is_hom_equivalent(a, b) -> bool:
    fa = a.facts if isinstance(a, Instance) else frozenset(a)
    fb = b.facts if isinstance(b, Instance) else frozenset(b)
    return (find_homomorphism(fa, b if isinstance(b, Instance) else fb) is not None
            and find_homomorphism(fb, a if isinstance(a, Instance) else fa) is not None)
