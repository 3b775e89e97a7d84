"""First-order term plumbing: positions, matching, unification."""

import pytest
from hypothesis import given, strategies as st

from lctrs.terms import (
    App,
    FreshGen,
    FunSym,
    INT,
    PositionOutOfRange,
    SortMismatch,
    Var,
    apply_subst,
    compose,
    fun_positions,
    is_ground,
    is_value,
    match,
    parallel_to,
    positions,
    replace_at,
    size,
    sort_of,
    subterm_at,
    unify,
    variables,
)
from lctrs.theory import int_value

F = FunSym("f", (INT, INT), INT)
G = FunSym("g", (INT,), INT)
C = FunSym("c", (), INT)

x, y, z = Var("x", INT), Var("y", INT), Var("z", INT)


def val(n):
    return App(int_value(n))


def _terms(depth):
    leaf = st.one_of(
        st.sampled_from([x, y, z]),
        st.integers(-5, 5).map(val),
        st.just(App(C)),
    )
    return st.recursive(
        leaf,
        lambda sub: st.one_of(
            st.tuples(sub).map(lambda a: App(G, list(a))),
            st.tuples(sub, sub).map(lambda a: App(F, list(a))),
        ),
        max_leaves=depth,
    )


class TestPositions:
    @given(_terms(8))
    def test_subterm_replace_roundtrip(self, t):
        for p in positions(t):
            assert replace_at(t, p, subterm_at(t, p)) == t

    @given(_terms(8))
    def test_root_position_is_whole_term(self, t):
        assert subterm_at(t, ()) == t
        assert next(positions(t)) == ()

    def test_fun_positions_skip_variables(self):
        t = App(F, [x, App(G, [y])])
        assert list(fun_positions(t)) == [(), (2,)]

    def test_positions_are_one_based(self):
        t = App(F, [val(1), App(G, [y])])
        assert subterm_at(t, (1,)) == val(1)
        assert subterm_at(t, (2, 1)) == y

    def test_out_of_range(self):
        with pytest.raises(PositionOutOfRange):
            subterm_at(App(C), (0,))

    def test_parallel(self):
        assert parallel_to((0,), (1,))
        assert not parallel_to((0,), (0, 1))
        assert not parallel_to((), (1,))


class TestMatch:
    @given(_terms(6))
    def test_match_recovers_instance(self, t):
        pattern = App(F, [x, App(G, [y])])
        subject = apply_subst(pattern, {x: t, y: val(7)})
        sigma = match(pattern, subject)
        assert sigma is not None
        assert apply_subst(pattern, sigma) == subject

    def test_nonlinear_pattern_needs_equal_args(self):
        pattern = App(F, [x, x])
        assert match(pattern, App(F, [val(1), val(1)])) is not None
        assert match(pattern, App(F, [val(1), val(2)])) is None

    def test_partial_binding_is_respected(self):
        sigma = match(App(G, [x]), App(G, [val(3)]), {x: val(4)})
        assert sigma is None

    def test_no_match_across_symbols(self):
        assert match(App(G, [x]), App(F, [val(0), val(0)])) is None


class TestUnify:
    @given(_terms(6), _terms(6))
    def test_unifier_equalizes(self, s, t):
        sigma = unify(s, t)
        if sigma is not None:
            s2 = apply_subst(s, sigma)
            assert s2 == apply_subst(t, sigma)
            # most general: applying again changes nothing
            assert apply_subst(s2, sigma) == s2

    def test_occurs_check(self):
        assert unify(x, App(G, [x])) is None

    def test_value_restriction(self):
        # a restricted variable only accepts values and other variables
        assert unify(x, App(G, [y]), value_restricted={x}) is None
        assert unify(x, val(2), value_restricted={x}) is not None
        assert unify(x, y, value_restricted={x}) is not None

    def test_restriction_spreads_through_bindings(self):
        # x ~ y first, then y must stay value-restricted
        s = App(F, [x, x])
        t = App(F, [y, App(G, [z])])
        assert unify(s, t, value_restricted={x}) is None


def test_compose_applies_left_first():
    sigma = compose({x: y}, {y: val(1)})
    assert apply_subst(x, sigma) == val(1)


@given(_terms(8))
def test_size_and_groundness(t):
    assert size(t) >= 1
    assert is_ground(t) == (not variables(t))


def test_sorts_and_values():
    from lctrs.terms import BOOL

    assert sort_of(App(F, [x, y])) == INT
    assert is_value(val(3))
    assert not is_value(App(C))
    with pytest.raises(SortMismatch):
        App(G, [App(FunSym("b", (), BOOL))])


def test_fresh_gen_avoids_reserved():
    gen = FreshGen([x, "v0"])
    v = gen.fresh("v", INT)
    assert v.name not in {"x", "v0"}
    w = gen.fresh("v", INT)
    assert w.name != v.name
