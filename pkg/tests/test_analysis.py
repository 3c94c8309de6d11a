import random

import pytest

from boundchase.analysis import (
    Bounded, Const, Edge, ExpK, Height, NotBounded, Position, Unknown,
    chase_size_bound, check_bounded, critical_database, dependency_graph,
    eval_bound, is_weakly_acyclic, parse_bound, sigma_size,
)
from boundchase.core import Atom, Constant, Instance, RuleOntology, instance_height, term_height
from boundchase.engine import ChaseGuard, run_chase
from boundchase.generators import get_fixture
from boundchase.textio import STAR, parse_ontology

from corpus import random_database, random_normal_ontology


def P(rel, i):
    return Position(rel, i)


def onto(text):
    return parse_ontology(text).ontology


# -- dependency graph ----------------------------------------------------

def test_graph_datalog_swap():
    g = dependency_graph(onto("R(X,Y) -> S(Y,X)."))
    assert g.edges == {Edge(P("R", 1), P("S", 2), False), Edge(P("R", 2), P("S", 1), False)}
    assert g.nodes == {P("R", 1), P("R", 2), P("S", 1), P("S", 2)}


def test_graph_existential():
    g = dependency_graph(onto("R(X) -> exists Z . S(X,Z)."))
    assert g.edges == {Edge(P("R", 1), P("S", 1), False), Edge(P("R", 1), P("S", 2), True)}


def test_graph_example1():
    g = dependency_graph(get_fixture("example1").ontology)
    special = {(e.src, e.dst) for e in g.edges if e.special}
    plain = {(e.src, e.dst) for e in g.edges if not e.special}
    assert special == {(P("R", i), P("S", j)) for i in (1, 2) for j in (1, 2)} | \
        {(P("S", 2), P("R", 2))}
    assert plain == {(P("R", 1), P("S", 1)), (P("R", 2), P("S", 1)), (P("S", 2), P("R", 1))}


# -- weak acyclicity -----------------------------------------------------

def test_datalog_is_weakly_acyclic():
    rng = random.Random(1)
    for _ in range(20):
        o = random_normal_ontology(rng, existential_p=0.0)
        assert is_weakly_acyclic(o) == (True, None)


def test_self_loop_witness():
    ok, cycle = is_weakly_acyclic(get_fixture("nonterminating").ontology)
    assert not ok
    assert cycle == [Edge(P("R", 2), P("R", 2), True)]


def test_example1_not_weakly_acyclic():
    ok, cycle = is_weakly_acyclic(get_fixture("example1").ontology)
    assert not ok
    assert cycle == [Edge(P("R", 1), P("S", 2), True), Edge(P("S", 2), P("R", 1), False)]


def test_witness_is_a_cycle_through_special_edge():
    rng = random.Random(2)
    for _ in range(60):
        o = random_normal_ontology(rng)
        ok, cycle = is_weakly_acyclic(o)
        if ok:
            continue
        edges = dependency_graph(o).edges
        assert all(e in edges for e in cycle)
        assert any(e.special for e in cycle)
        for e1, e2 in zip(cycle, cycle[1:] + cycle[:1]):
            assert e1.dst == e2.src


def test_weakly_acyclic_chases_terminate():
    rng = random.Random(4)
    seen = 0
    for _ in range(150):
        o = random_normal_ontology(rng)
        if not is_weakly_acyclic(o)[0]:
            continue
        seen += 1
        d = random_database(rng, o.db_schema)
        assert run_chase(d, o, ChaseGuard.none()).fixpoint
        assert run_chase(critical_database(o), o, ChaseGuard.none()).fixpoint
    assert seen > 20


# -- critical database, size ---------------------------------------------

def test_critical_database_examples():
    assert critical_database(get_fixture("example1").ontology) == \
        Instance([Atom("R", (STAR, STAR))])
    o = onto("@database P/1\nP(X) -> Q(X, c).")
    assert critical_database(o) == Instance([Atom("P", (Constant("c"),)), Atom("P", (STAR,))])
    assert critical_database(onto("-> P(c).")) == Instance()


def test_sigma_size():
    assert sigma_size(get_fixture("example1").ontology) == 18
    assert sigma_size(onto("P(X) -> Q(X).")) == 4
    assert sigma_size(RuleOntology(())) == 0


# -- bounds --------------------------------------------------------------

def test_eval_bound():
    assert eval_bound(ExpK(0), 18) == 18
    assert eval_bound(ExpK(1), 4) == 16
    assert eval_bound(ExpK(2), 2) == 16
    assert eval_bound(ExpK(3), 2) == 2 ** 16
    assert eval_bound(Const(7), 100) == 7
    assert eval_bound(Height(3), 100) == 3
    assert eval_bound(ExpK(2), 18) == 2 ** (2 ** 18)


def test_parse_bound():
    assert parse_bound("exp:2") == ExpK(2)
    assert parse_bound("const:3") == Const(3)
    assert parse_bound("height:0") == Height(0)
    for bad in ("exp", "const:-1", "foo:2", "const:0"):
        with pytest.raises(ValueError):
            parse_bound(bad)


def test_check_bounded_example1():
    o = get_fixture("example1").ontology
    assert check_bounded(o, Const(2)) == Bounded(2, 5)
    verdict = check_bounded(o, Const(1))
    assert isinstance(verdict, NotBounded)
    assert term_height(verdict.witness) == 2 and verdict.stage == 2
    # exp_0 evaluates to the ontology size 18
    assert check_bounded(o, ExpK(0)) == Bounded(2, 5)


def test_check_bounded_nonterminating():
    o = get_fixture("nonterminating").ontology
    verdict = check_bounded(o, Const(3))
    assert isinstance(verdict, NotBounded)
    assert verdict.stage == 4 and verdict.height == 4
    assert check_bounded(o, ExpK(2), max_stages=10) == Unknown(10)


def test_check_bounded_monotone_in_height():
    rng = random.Random(6)
    for _ in range(30):
        o = random_normal_ontology(rng)
        verdicts = [check_bounded(o, Height(h)) for h in range(5)]
        for lo in range(5):
            for hi in range(lo, 5):
                if isinstance(verdicts[lo], Bounded):
                    assert isinstance(verdicts[hi], Bounded)
                if isinstance(verdicts[hi], NotBounded):
                    assert isinstance(verdicts[lo], NotBounded)


def test_bounded_verdict_matches_direct_chase():
    rng = random.Random(8)
    for _ in range(40):
        o = random_normal_ontology(rng)
        verdict = check_bounded(o, Height(4))
        if isinstance(verdict, Bounded):
            direct = run_chase(critical_database(o), o, ChaseGuard.none())
            assert instance_height(direct.instance) == verdict.max_height
            assert len(direct.instance) == verdict.chase_size
        else:
            assert term_height(verdict.witness) > 4


def test_chase_size_bound_example():
    o = onto("@database R/2\nR(X,Y) -> exists A,B . S(X,A), S(X,B).\n"
             "S(X,Y) -> exists C . R(Y,C).")
    assert chase_size_bound(o, 2, 1) == 338
    ex = get_fixture("example1")
    assert len(ex.expected) <= chase_size_bound(ex.ontology, 2, 1)


def test_chase_size_bound_datalog_and_empty():
    o = onto("@database E/2\nE(X,Y) -> T(X,Y).\nT(X,Y), E(Y,Z) -> T(X,Z), P(X).")
    for h in range(4):
        assert chase_size_bound(o, h, 3) == 9 + 9 + 3
    assert chase_size_bound(o, 2, 0) == 0


def test_chase_size_bound_dominates():
    rng = random.Random(10)
    for _ in range(40):
        o = random_normal_ontology(rng)
        d = random_database(rng, o.db_schema)
        result = run_chase(d, o, ChaseGuard(max_height=2))
        if result.fixpoint:
            c = len(d.active_domain() | o.constants())
            assert len(result.instance) <= chase_size_bound(o, 2, c)
