"""Dependency graph, weak acyclicity, critical database and boundedness checks."""
from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass
from typing import Optional, Union

from .core import Atom, Instance, RuleOntology, instance_height, term_height
from .engine import ChaseGuard, ChaseStatus, chase_skolem, skolem_signature, skolemize
from .textio import STAR


@dataclass(frozen=True, order=True)
class Position:
    relation: str
    index: int  # 1-based

    def __str__(self):
        return f"({self.relation},{self.index})"


@dataclass(frozen=True, order=True)
class Edge:
    src: Position
    dst: Position
    special: bool

    def __str__(self):
        arrow = "=>" if self.special else "->"
        return f"{self.src}{arrow}{self.dst}"


@dataclass(frozen=True)
class DependencyGraph:
    nodes: frozenset
    edges: frozenset

    def successors(self) -> dict:
        out = {n: [] for n in self.nodes}
        for e in sorted(self.edges):
            out[e.src].append(e)
        return out


def _positions(atoms, var):
    return [Position(a.relation, i) for a in atoms
            for i, t in enumerate(a.terms, start=1) if t == var]


def dependency_graph(rules) -> DependencyGraph:
    if isinstance(rules, RuleOntology):
        rules = rules.rules
    nodes, edges = set(), set()
    for rule in rules:
        for a in rule.body + rule.head:
            nodes.update(Position(a.relation, i) for i in range(1, a.arity + 1))
        for x in rule.frontier:
            for p in _positions(rule.body, x):
                for q in _positions(rule.head, x):
                    edges.add(Edge(p, q, False))
                for z in rule.existentials:
                    for q in _positions(rule.head, z):
                        edges.add(Edge(p, q, True))
    return DependencyGraph(frozenset(nodes), frozenset(edges))


def _shortest_path(succ, start, goal):
    """BFS edge path from ``start`` to ``goal``; neighbours in sorted order."""
    if start == goal:
        return []
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for e in succ.get(node, ()):
            if e.dst in parent:
                continue
            parent[e.dst] = e
            if e.dst == goal:
                path = []
                cur = goal
                while parent[cur] is not None:
                    path.append(parent[cur])
                    cur = parent[cur].src
                return path[::-1]
            queue.append(e.dst)
    return None


def _cycle_key(cycle):
    # rotate to start at the smallest source position
    k = min(range(len(cycle)), key=lambda i: (cycle[i].src, not cycle[i].special))
    rot = cycle[k:] + cycle[:k]
    return (len(rot), [(e.src, e.dst, not e.special) for e in rot]), rot


def is_weakly_acyclic(o) -> tuple:
    """Return ``(True, None)`` or ``(False, cycle)``.

    The witness is a shortest cycle through a special edge, given as a list
    of edges rotated to start at its smallest position.
    """
    graph = dependency_graph(o)
    succ = graph.successors()
    best = None
    for e in sorted(graph.edges):
        if not e.special:
            continue
        back = _shortest_path(succ, e.dst, e.src)
        if back is None:
            continue
        key, rot = _cycle_key([e] + back)
        if best is None or key < best[0]:
            best = (key, rot)
    if best is None:
        return True, None
    return False, best[1]


def critical_database(o: RuleOntology) -> Instance:
    """Every database relation full over the rule constants plus ``*``."""
    domain = sorted(o.constants() | {STAR}, key=lambda c: c.name)
    facts = []
    for rel, arity in o.db_schema.items():
        for combo in itertools.product(domain, repeat=arity):
            facts.append(Atom(rel, combo))
    return Instance(facts)


def sigma_size(rules) -> int:
    """Relation-symbol occurrences plus term occurrences over all atoms."""
    if isinstance(rules, RuleOntology):
        rules = rules.rules
    return sum(1 + a.arity for r in rules for a in r.body + r.head)


# ----------------------------------------------------------------------
# Bound functions
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class ExpK:
    k: int

    def __str__(self):
        return f"exp:{self.k}"


@dataclass(frozen=True)
class Const:
    c: int

    def __post_init__(self):
        if self.c < 1:
            raise ValueError("a constant bound must be positive")

    def __str__(self):
        return f"const:{self.c}"


@dataclass(frozen=True)
class Height:
    h: int

    def __str__(self):
        return f"height:{self.h}"


BoundSpec = Union[ExpK, Const, Height]

_BOUND_RE = re.compile(r"(exp|const|height):([0-9]+)")


def parse_bound(text: str) -> BoundSpec:
    m = _BOUND_RE.fullmatch(text.strip())
    if m is None:
        raise ValueError(f"bad bound {text!r}; use exp:K, const:C or height:H")
    kind, val = m.group(1), int(m.group(2))
    return {"exp": ExpK, "const": Const, "height": Height}[kind](val)


def eval_bound(b: BoundSpec, n: int) -> int:
    if isinstance(b, ExpK):
        value = n
        for _ in range(b.k):
            value = 2 ** value
        return value
    if isinstance(b, Const):
        return b.c
    return b.h


# ----------------------------------------------------------------------
# Boundedness
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Bounded:
    max_height: int
    chase_size: int


@dataclass(frozen=True)
class NotBounded:
    witness: object
    stage: int

    @property
    def height(self):
        return term_height(self.witness)


@dataclass(frozen=True)
class Unknown:
    stages_run: int


BoundednessVerdict = Union[Bounded, NotBounded, Unknown]


def check_bounded(o: RuleOntology, b: BoundSpec,
                  max_stages: Optional[int] = None) -> BoundednessVerdict:
    """Decide whether every chase of ``o`` stays within the height bound ``b``.

    The critical database has the highest chase, so chasing it with the
    height as a guard decides the question. Without ``max_stages`` this
    always terminates: terms under a fixed height are finitely many.
    """
    limit = eval_bound(b, sigma_size(o))
    guard = ChaseGuard(max_height=limit, max_stages=max_stages)
    result = chase_skolem(critical_database(o).facts, skolemize(o), guard)
    if result.status is ChaseStatus.HEIGHT_EXCEEDED:
        return NotBounded(result.witness, result.stages)
    if result.status is ChaseStatus.STAGE_LIMIT:
        return Unknown(result.stages)
    return Bounded(instance_height(result.instance), len(result.instance))


def chase_size_bound(o: RuleOntology, height: int, constants: int) -> int:
    """Upper bound on the number of facts of a chase with terms of height <= ``height``."""
    arities = [s.arity for s in skolem_signature(o)]
    t = constants
    for _ in range(height):
        t = constants + sum(t ** a for a in arities)
    return sum(t ** arity for arity in o.schema.values())
