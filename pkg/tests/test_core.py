import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boundchase.core import (
    ArityError, Atom, Constant, Func, Instance, Null, Rule, RuleOntology, Schema,
    SkolemSymbol, Variable, apply_substitution, atom_key, find_homomorphism,
    instance_height, is_hom_equivalent, iter_homomorphisms, rename_apart,
    restrict_to_schema, term_height,
)
from boundchase.generators import get_fixture
from boundchase.textio import parse_facts, print_term

a, b = Constant("a"), Constant("b")
X, Y, Z = Variable("X"), Variable("Y"), Variable("Z")
f_y = SkolemSymbol("sk_1_Y", 1)
f_z = SkolemSymbol("sk_1_Z", 1)
f_v = SkolemSymbol("sk_2_V", 1)


def R(*t):
    return Atom("R", t)


def S(*t):
    return Atom("S", t)


@pytest.fixture
def example1_chase():
    return get_fixture("example1").expected


# -- heights -------------------------------------------------------------

def test_term_height_examples():
    assert term_height(a) == 0
    assert term_height(Func(f_y, (a,))) == 1
    f = SkolemSymbol("f", 2)
    g = SkolemSymbol("g", 1)
    assert term_height(Func(f, (Func(g, (a,)), b))) == 2
    assert term_height(Null("n")) == 0
    assert term_height(Func(SkolemSymbol("c", 0), ())) == 1


def test_term_height_rejects_variables():
    with pytest.raises(ValueError):
        term_height(X)
    with pytest.raises(ValueError):
        term_height(Func(f_y, (X,)))


def _terms_up_to(height, symbols, leaves):
    layers = [list(leaves)]
    for _ in range(height):
        prev = [t for layer in layers for t in layer]
        new = []
        for sym in symbols:
            for args in itertools.product(prev, repeat=sym.arity):
                t = Func(sym, args)
                if t.height == len(layers):
                    new.append(t)
        layers.append(new)
    return [t for layer in layers for t in layer]


def _nesting_depth(text):
    depth = best = 0
    for ch in text:
        if ch == "(":
            depth += 1
            best = max(best, depth)
        elif ch == ")":
            depth -= 1
    return best


def test_term_height_matches_printed_nesting():
    # independent oracle: parenthesis depth of the printed term
    symbols = [SkolemSymbol("f", 1), SkolemSymbol("g", 2)]
    terms = _terms_up_to(3, symbols, [a])
    assert len(terms) == 183
    for t in terms:
        assert term_height(t) == _nesting_depth(print_term(t))
        if type(t) is Func:
            assert term_height(t) == 1 + max(term_height(s) for s in t.args)


def test_instance_height(example1_chase):
    assert instance_height(Instance([R(a, a)])) == 0
    assert instance_height(example1_chase) == 2
    assert instance_height(Instance()) == 0


def test_func_arity_checked():
    with pytest.raises(ArityError):
        Func(f_y, (a, b))


# -- substitutions -------------------------------------------------------

def test_apply_substitution_examples():
    assert apply_substitution({X: a}, R(X, X)) == R(a, a)
    assert apply_substitution({}, R(X, Y)) == R(X, Y)
    fya = Func(f_y, (a,))
    assert apply_substitution({Z: fya}, S(Z, b)) == S(fya, b)


def test_apply_substitution_leaves_constants_and_unmapped():
    assert apply_substitution({X: b}, R(a, Y)) == R(a, Y)
    assert apply_substitution({X: b}, Func(f_y, (X,))) == Func(f_y, (b,))
    assert apply_substitution({X: a}, {R(X, Y), S(X, X)}) == {R(a, Y), S(a, a)}


# -- homomorphisms -------------------------------------------------------

def test_find_homomorphism_examples(example1_chase):
    assert find_homomorphism([R(X, Y)], Instance([R(a, b)])) == {X: a, Y: b}
    assert find_homomorphism([R(X, X)], Instance([R(a, b)])) is None
    h = find_homomorphism([S(X, Y), S(Y, Z)], example1_chase)
    assert h == {X: a, Y: Func(f_y, (a,)), Z: Func(f_z, (a,))}


def _brute_force(src, dst):
    """Every assignment of the source's mappable terms to dst terms."""
    facts = set(dst)
    keys = sorted({t for atom in src for t in atom.terms if type(t) is not Constant},
                  key=lambda t: (type(t).__name__, str(t)))
    values = sorted({t for atom in facts for t in atom.terms}, key=str)
    found = []
    for combo in itertools.product(values, repeat=len(keys)):
        h = dict(zip(keys, combo))
        if all(apply_substitution(h, atom) in facts for atom in src):
            found.append(h)
    return found


@st.composite
def small_problem(draw):
    consts = [a, b, Constant("c")]
    vars_ = [X, Y, Z, Variable("W")][:draw(st.integers(1, 4))]
    rels = [("P", 1), ("R", 2)]

    def atom(pool):
        name, arity = draw(st.sampled_from(rels))
        return Atom(name, tuple(draw(st.sampled_from(pool)) for _ in range(arity)))

    dst = [atom(consts) for _ in range(draw(st.integers(0, 6)))]
    src = [atom(vars_ + consts[:1]) for _ in range(draw(st.integers(1, 3)))]
    return src, Instance(dst)


@settings(max_examples=300, deadline=None)
@given(small_problem())
def test_homomorphism_search_matches_enumeration(problem):
    src, dst = problem
    oracle = _brute_force(src, dst.facts)
    found = list(iter_homomorphisms(src, dst))
    key = lambda h: sorted((str(k), str(v)) for k, v in h.items())
    assert sorted(map(key, found)) == sorted(map(key, oracle))
    h = find_homomorphism(src, dst)
    assert (h is None) == (not oracle)
    if h is not None:
        assert all(apply_substitution(h, atom) in dst for atom in src)


def test_hom_equivalence_examples(example1_chase):
    n1, n2 = Null("n1"), Null("n2")
    assert is_hom_equivalent(Instance([R(a, n1)]), Instance([R(a, n1), R(a, n2)]))
    assert not is_hom_equivalent(Instance([R(a, b)]), Instance([R(b, a)]))

    deep = Func(f_v, (Func(f_z, (a,)),))
    fresh = Null("fresh")
    renamed = Instance(apply_substitution({deep: fresh}, x) for x in example1_chase.facts)
    assert renamed != example1_chase
    assert is_hom_equivalent(example1_chase, renamed)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("PR"), st.sampled_from(["a", "b", "_:n", "_:m"]),
                          st.sampled_from(["a", "_:n", "_:k"])), max_size=5),
       st.lists(st.tuples(st.sampled_from("PR"), st.sampled_from(["a", "b", "_:n"]),
                          st.sampled_from(["a", "_:n", "_:k"])), max_size=5))
def test_hom_equivalence_reflexive_and_symmetric(xs, ys):
    def inst(rows):
        return parse_facts("".join(f"{r}({s},{t}).\n" for r, s, t in rows))

    A, B = inst(xs), inst(ys)
    assert is_hom_equivalent(A, A)
    assert is_hom_equivalent(A, B) == is_hom_equivalent(B, A)


# -- schemas, rules, ontologies -------------------------------------------

def test_restrict_to_schema(example1_chase):
    only_r = restrict_to_schema(example1_chase, Schema([("R", 2)]))
    assert {x.relation for x in only_r.facts} == {"R"}
    assert len(only_r) == 3
    assert restrict_to_schema(example1_chase, example1_chase.schema) == example1_chase
    assert restrict_to_schema(example1_chase, Schema()) == Instance()


def test_schema_rejects_two_arities():
    with pytest.raises(ArityError):
        Schema([("R", 1), ("R", 2)])
    with pytest.raises(ArityError):
        RuleOntology((Rule((R(X, Y),), (Atom("R", (X,)),)),))


def test_rule_frontier_and_existentials():
    rule = Rule((R(X, Y), S(X, Z)), (R(Z, Variable("V")),))
    assert rule.frontier == (Z,)
    assert rule.existentials == (Variable("V"),)
    rule = Rule((R(Y, X),), (S(X, Y), S(Y, Z)))
    assert rule.frontier == (Y, X)  # first body occurrence
    assert rule.existentials == (Z,)


def test_rule_body_is_a_set():
    r1 = Rule((R(X, Y), S(Y, X)), (R(X, X),))
    r2 = Rule((S(Y, X), R(X, Y), R(X, Y)), (R(X, X),))
    assert r1 == r2


def test_rename_apart():
    r1 = Rule((R(X, Y),), (S(X, Y),))
    r2 = Rule((S(X, Y),), (R(Y, X),))
    out = rename_apart([r1, r2])
    names1 = {v.name for v in out[0].variables}
    names2 = {v.name for v in out[1].variables}
    assert not names1 & names2
    assert rename_apart(out) == out
    o = RuleOntology((r1, r2))
    assert o.rules == out


def test_normal_flag():
    r = Rule((Atom("D", (X,)),), (Atom("P", (X,)),))
    assert RuleOntology((r,), Schema([("D", 1)]), Schema([("P", 1)])).is_normal
    assert not RuleOntology((r,), Schema([("D", 1)]), Schema([("D", 1)])).is_normal
    assert not RuleOntology((r,), Schema([("P", 1)]), Schema()).is_normal


def test_instance_rejects_variables():
    with pytest.raises(ValueError):
        Instance([R(a, X)])


def test_canonical_order_is_total_and_stable():
    atoms = [R(b, a), R(a, Func(f_y, (a,))), R(a, Null("n")), R(a, a), S(a, a)]
    ordered = sorted(atoms, key=atom_key)
    assert ordered == sorted(reversed(atoms), key=atom_key)
    assert ordered[0] == R(a, a)
