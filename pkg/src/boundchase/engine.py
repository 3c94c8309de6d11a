"""Skolem chase with height and stage guards, BCQ entailment, worldviews."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import (
    Func, FactIndex, Instance, RuleOntology, SkolemSymbol,
    apply_substitution, find_homomorphism, iter_homomorphisms,
    restrict_to_schema, sort_atoms, term_key,
)

log = logging.getLogger(__name__)


class SchemaViolation(ValueError):
    pass


class GuardExhausted(RuntimeError):
    """The chase stopped on a guard where a fixpoint was required."""

    def __init__(self, result):
        self.result = result
        super().__init__(
            f"chase stopped with status {result.status.value} "
            f"after {result.stages} stages")


@dataclass(frozen=True)
class SkolemRule:
    body: tuple
    head: tuple
    frontier: tuple
    index: int
    symbols: tuple = ()


def skolem_symbol(rule_index: int, var, frontier_size: int) -> SkolemSymbol:
    return SkolemSymbol(f"sk_{rule_index}_{var.name}", frontier_size)


def skolemize(o) -> tuple:
    """Replace each existential ``z`` of rule ``i`` by ``sk_i_z(frontier)``."""
    rules = o.rules if isinstance(o, RuleOntology) else tuple(o)
    out = []
    for i, rule in enumerate(rules, start=1):
        fr = rule.frontier
        mapping = {}
        for z in rule.existentials:
            mapping[z] = Func(skolem_symbol(i, z, len(fr)), fr)
        head = apply_substitution(mapping, rule.head) if mapping else rule.head
        symbols = tuple(f.symbol for f in mapping.values())
        out.append(SkolemRule(rule.body, sort_atoms(head), fr, i, symbols))
    return tuple(out)


def skolem_signature(o) -> tuple:
    return tuple(s for r in skolemize(o) for s in r.symbols)


@dataclass(frozen=True)
class ChaseGuard:
    """Stopping conditions for a chase run.

    A run with neither a height nor a stage bound may not terminate, so it
    must be requested explicitly with ``unbounded=True``.
    """
    max_height: Optional[int] = None
    max_stages: Optional[int] = None
    unbounded: bool = False

    def __post_init__(self):
        if self.max_height is None and self.max_stages is None and not self.unbounded:
            raise ValueError("give max_height, max_stages or unbounded=True")

    @classmethod
    def none(cls) -> "ChaseGuard":
        return cls(unbounded=True)


class ChaseStatus(enum.Enum):
    FIXPOINT = "fixpoint"
    HEIGHT_EXCEEDED = "height-exceeded"
    STAGE_LIMIT = "stage-limit"


@dataclass(frozen=True)
class ChaseResult:
    instance: Instance
    stages: int
    status: ChaseStatus
    witness: Optional[object] = None

    @property
    def fixpoint(self) -> bool:
        return self.status is ChaseStatus.FIXPOINT


def _fire(rule, h):
    return [apply_substitution(h, a) for a in rule.head]


def _triggers(rule, index, delta=None):
    """Substitutions for the body of ``rule`` over ``index``.

    With ``delta`` only triggers using at least one delta fact are produced
    (possibly with repeats).
    """
    if not rule.body:
        if delta is None:
            yield {}
        return
    if delta is None:
        yield from iter_homomorphisms(rule.body, index)
        return
    delta_index = FactIndex(a for a in delta if a.relation in
                            {b.relation for b in rule.body})
    for i, atom in enumerate(rule.body):
        rest = rule.body[:i] + rule.body[i + 1:]
        for h in iter_homomorphisms((atom,), delta_index):
            yield from iter_homomorphisms(rest, index, h)


def chase_stage(inst, rules: Sequence[SkolemRule]) -> Instance:
    """Fire every trigger of ``rules`` over ``inst`` once and add the heads."""
    if isinstance(inst, Instance):
        index = inst.index
        facts = set(inst.facts)
    else:
        facts = set(inst)
        index = FactIndex(facts)
    new = set()
    for rule in rules:
        for h in _triggers(rule, index):
            new.update(_fire(rule, h))
    return Instance(facts | new)


def _over_height(atoms, limit):
    worst = []
    for a in atoms:
        for t in a.terms:
            if type(t) is Func and t.height > limit:
                worst.append(t)
    return worst


def chase_skolem(facts, rules: Sequence[SkolemRule], guard: ChaseGuard) -> ChaseResult:
    """Run the staged Skolem chase of pre-skolemized ``rules`` on ``facts``.

    Internally semi-naive: stage n only evaluates triggers touching a fact
    first derived at stage n-1, which yields the same stage sets as firing
    every trigger.
    """
    index = FactIndex(facts)
    if guard.max_height is not None:
        bad = _over_height(index.facts, guard.max_height)
        if bad:
            return ChaseResult(Instance(index.facts), 0, ChaseStatus.HEIGHT_EXCEEDED,
                               min(bad, key=term_key))
    if not rules:
        return ChaseResult(Instance(index.facts), 0, ChaseStatus.FIXPOINT)
    delta = None
    stage = 0
    while True:
        if guard.max_stages is not None and stage >= guard.max_stages:
            return ChaseResult(Instance(index.facts), stage, ChaseStatus.STAGE_LIMIT)
        stage += 1
        produced = set()
        for rule in rules:
            for h in _triggers(rule, index, delta):
                for a in _fire(rule, h):
                    if a not in index.facts:
                        produced.add(a)
        if not produced:
            return ChaseResult(Instance(index.facts), stage, ChaseStatus.FIXPOINT)
        for a in produced:
            index.add(a)
        delta = produced
        if guard.max_height is not None:
            bad = _over_height(produced, guard.max_height)
            if bad:
                return ChaseResult(Instance(index.facts), stage,
                                   ChaseStatus.HEIGHT_EXCEEDED, min(bad, key=term_key))


def run_chase(d: Instance, o: RuleOntology, guard: ChaseGuard,
              check_schema: bool = True) -> ChaseResult:
    """Chase database ``d`` with the rules of ``o`` until a fixpoint or a guard."""
    if check_schema:
        for a in d.facts:
            if o.db_schema.get(a.relation) != a.arity:
                raise SchemaViolation(
                    f"fact {a} is not over the database schema")
    return chase_skolem(d.facts, skolemize(o), guard)


class Answer(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNKNOWN = "unknown"


def entails_bcq(d: Instance, o: RuleOntology, q, guard: ChaseGuard,
                check_schema: bool = True) -> Answer:
    atoms = q.atoms if hasattr(q, "atoms") else tuple(q)
    for a in atoms:
        if o.query_schema.get(a.relation) != a.arity:
            log.warning("query atom %s is not over the query schema", a)
    result = run_chase(d, o, guard, check_schema)
    if find_homomorphism(atoms, result.instance) is not None:
        return Answer.TRUE
    return Answer.FALSE if result.fixpoint else Answer.UNKNOWN


def worldview(o: RuleOntology, d: Instance, guard: ChaseGuard,
              check_schema: bool = True) -> Instance:
    """The chase of ``d`` restricted to the query schema."""
    result = run_chase(d, o, guard, check_schema)
    if not result.fixpoint:
        raise GuardExhausted(result)
    return restrict_to_schema(result.instance, o.query_schema)
