"""Linear-order ontologies of tower-exponential length, and named fixtures."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .core import Atom, Constant, Instance, Rule, RuleOntology, Schema, Variable
from .textio import parse_facts, parse_ontology


@dataclass(frozen=True)
class OrderParams:
    k: int
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("the base order needs n >= 2")
        if self.k < 0:
            raise ValueError("k must be non-negative")

    @property
    def levels(self) -> int:
        return self.k // 2 + 1 if self.k % 2 == 0 else self.k // 2 + 2

    @property
    def base_length(self) -> int:
        if self.k % 2 == 0:
            return self.n
        return (self.n - 1).bit_length()  # ceil(log2 n)


def _atom(rel, *terms):
    return Atom(rel, tuple(Variable(t) if t[0].isupper() else Constant(t)
                           for t in terms))


def _rule(body, head):
    return Rule(tuple(_atom(*a) for a in body), tuple(_atom(*a) for a in head))


def _level_rules(i: int) -> list:
    prev = i - 1
    succ_p, min_p, max_p = f"Succ_{prev}", f"Min_{prev}", f"Max_{prev}"
    bs, c = f"BS_{i}", f"C_{i}"
    ss, mins, maxs = f"SuccStar_{i}", f"MinStar_{i}", f"MaxStar_{i}"
    return [
        # strings of length one
        _rule([(min_p, "V")], [(bs, "V", "0"), (bs, "V", "1")]),
        _rule([(min_p, "V")], [(ss, "V", "0", "1"), (mins, "V", "0"), (maxs, "V", "1")]),
        # concatenation doubles the length
        _rule([(bs, "V", "X"), (bs, "V", "Y")], [(c, "V", "X", "Y", "Z")]),
        _rule([(c, "V", "X", "Y", "Z"), (succ_p, "V", "W")], [(bs, "W", "Z")]),
        # lexicographic successor
        _rule([(c, "V", "X", "Y", "Z"), (c, "V", "X", "Y0", "Z0"),
               (ss, "V", "Y", "Y0"), (succ_p, "V", "W")],
              [(ss, "W", "Z", "Z0")]),
        _rule([(c, "V", "X", "Y", "Z"), (c, "V", "X0", "Y0", "Z0"),
               (maxs, "V", "Y"), (mins, "V", "Y0"), (ss, "V", "X", "X0"),
               (succ_p, "V", "W")],
              [(ss, "W", "Z", "Z0")]),
        _rule([(mins, "V", "X"), (mins, "V", "Y"), (c, "V", "X", "Y", "Z"),
               (succ_p, "V", "W")],
              [(mins, "W", "Z")]),
        _rule([(maxs, "V", "X"), (maxs, "V", "Y"), (c, "V", "X", "Y", "Z"),
               (succ_p, "V", "W")],
              [(maxs, "W", "Z")]),
        # strings of the maximal length form the new order
        _rule([(ss, "V", "X", "Y"), (max_p, "V")], [(f"Succ_{i}", "X", "Y")]),
        _rule([(mins, "V", "X"), (max_p, "V")], [(f"Min_{i}", "X")]),
        _rule([(maxs, "V", "X"), (max_p, "V")], [(f"Max_{i}", "X")]),
    ]


def gen_order_ontology(p: OrderParams) -> RuleOntology:
    """Rules whose chase builds a linear order over ever longer binary strings.

    Level 0 is the order ``0 < 1 < ... < b-1`` given by ground rules; each
    further level orders the binary strings of length ``2^(b-1)`` over the
    previous level.
    """
    b = p.base_length
    rules = [
        _rule([], [("Min_0", "0")]),
        _rule([], [("Max_0", str(b - 1))]),
    ]
    if b >= 2:
        rules.append(_rule([], [("Succ_0", str(j), str(j + 1)) for j in range(b - 1)]))
    for i in range(1, p.levels + 1):
        rules.extend(_level_rules(i))
    top = p.levels
    query = Schema([(f"Min_{top}", 1), (f"Max_{top}", 1), (f"Succ_{top}", 2)])
    return RuleOntology(tuple(rules), Schema(), query)


# ----------------------------------------------------------------------
# Fixtures
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Fixture:
    name: str
    ontology: RuleOntology
    database: Optional[Instance] = None
    expected: Optional[Instance] = None
    text: str = ""


EXAMPLE1 = """\
@database R/2
@query R/2
R(X,X) -> exists Y,Z . S(X,Y), S(Y,Z).
R(X,Y), S(X,Z) -> exists V . R(Z,V).
"""

EXAMPLE1_CHASE = """\
R(a,a).
S(a,sk_1_Y(a)).
S(sk_1_Y(a),sk_1_Z(a)).
R(sk_1_Y(a),sk_2_V(sk_1_Y(a))).
R(sk_1_Z(a),sk_2_V(sk_1_Z(a))).
"""

EXAMPLE2_O0 = """\
@database D/2
@query R/2
D(X,Y) -> R(X,Y).
R(X,X) -> exists Y,Z . S(X,Y), S(Y,Z).
R(X,Y), S(X,Z) -> exists V . R(Z,V).
"""

# The ten rules of the worked rewrite, written out by hand.
EXAMPLE2_REWRITTEN = """\
@database D/2
@query R/2
D(X,Y) -> Dstar(X,□,□,Y,□,□).
Dstar(X1,X2,X3,Y1,Y2,Y3) -> Rstar(X1,X2,X3,Y1,Y2,Y3).
Rstar(X1,X2,□,X1,X2,□) -> Sstar(X1,X2,□,$fy,X1,X2), Sstar($fy,X1,X2,$fz,X1,X2).
Rstar(X1,X2,X3,Y1,Y2,Y3), Sstar(X1,X2,X3,Z1,Z2,□) -> Rstar(Z1,Z2,□,$fv,Z1,Z2).
Rstar(X1,X2,X3,Y1,Y2,Y3) -> Dom(X1,X2,X3), Dom(Y1,Y2,Y3).
Dom($fy,X1,X2) -> exists Y . Map($fy,X1,X2,Y).
Dom($fz,X1,X2) -> exists Z . Map($fz,X1,X2,Z).
Dom($fv,X1,X2) -> exists V . Map($fv,X1,X2,V).
Dom(X,□,□) -> Map(X,□,□,X).
Rstar(X1,X2,X3,Y1,Y2,Y3), Map(X1,X2,X3,X), Map(Y1,Y2,Y3,Y) -> R(X,Y).
"""

NONTERMINATING = """\
@database R/2
@query R/2
R(X,Y) -> exists Z . R(Y,Z).
"""


def fixtures() -> dict:
    """Named test inputs, keyed by stable name."""
    def make(name, text, db=None, expected=None):
        return Fixture(name, parse_ontology(text).ontology,
                       parse_facts(db) if db is not None else None,
                       parse_facts(expected) if expected is not None else None,
                       text)

    return {f.name: f for f in [
        make("example1", EXAMPLE1, "R(a,a).", EXAMPLE1_CHASE),
        make("example2_O0", EXAMPLE2_O0, "D(a,a)."),
        make("example2_rewritten", EXAMPLE2_REWRITTEN, "D(a,a)."),
        make("nonterminating", NONTERMINATING, "R(a,a)."),
    ]}


def get_fixture(name: str) -> Fixture:
    table = fixtures()
    if name not in table:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(sorted(table))}")
    return table[name]
