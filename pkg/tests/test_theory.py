"""Built-in theories: value terms, evaluation, formula helpers."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

import groundtruth
from lctrs.terms import App, BOOL, INT, REAL, Var, bitvec
from lctrs.theory import (
    FALSE,
    TRUE,
    NotGroundLogical,
    UnknownSymbol,
    UnknownTheory,
    calc_result,
    conjuncts,
    get_theory,
    interpret,
    int_value,
    iter_sort_values,
    mk_and,
    mk_eq,
    mk_not,
    mk_or,
    value_term,
)

INTS = get_theory("Ints")


def val(n):
    return App(int_value(n))


def op(name, *args):
    return App(INTS.op(name, tuple(a.sort if isinstance(a, Var) else a.sym.result for a in args)), list(args))


def _ground_int_terms():
    leaf = st.integers(-9, 9).map(val)
    return st.recursive(
        leaf,
        lambda sub: st.one_of(
            st.tuples(st.sampled_from(["+", "-", "*"]), sub, sub).map(
                lambda t: op(t[0], t[1], t[2])
            ),
            sub.map(lambda a: op("-", a)),
        ),
        max_leaves=12,
    )


@given(_ground_int_terms())
def test_interpret_matches_independent_evaluator(t):
    assert interpret(t) == groundtruth.eval_ground(t)


@given(_ground_int_terms(), _ground_int_terms())
def test_comparisons_match_independent_evaluator(a, b):
    for name in ("<", "<=", ">", ">=", "="):
        t = op(name, a, b)
        assert interpret(t) == groundtruth.eval_ground(t)


def test_interpret_needs_ground_logical_input():
    with pytest.raises(NotGroundLogical):
        interpret(op("+", val(1), Var("x", INT)))


def test_calc_result_wraps_value():
    r = calc_result(op("+", val(2), val(3)))
    assert r == val(5)


def test_division_is_euclidean_and_total():
    assert interpret(op("div", val(7), val(2))) == 3
    assert interpret(op("div", val(-7), val(2))) == -4
    assert interpret(op("mod", val(-7), val(2))) == 1
    # division by zero is totalized rather than an error
    assert interpret(op("div", val(1), val(0))) == 0


class TestValues:
    def test_int_values(self):
        assert value_term(-3, INT).sym.name == "-3"
        assert interpret(value_term(-3, INT)) == -3

    def test_bool_values(self):
        assert interpret(TRUE) is True
        assert interpret(FALSE) is False

    def test_real_values(self):
        q = value_term(Fraction(5, 2), REAL)
        assert interpret(q) == Fraction(5, 2)

    def test_bitvector_values(self):
        b = value_term(5, bitvec(4))
        assert b.sym.name == "#b0101"
        assert interpret(b) == (4, 5)

    def test_iter_bool_sort_is_finite(self):
        assert sorted(str(v) for v in iter_sort_values(BOOL)) == [
            str(FALSE),
            str(TRUE),
        ]


class TestFormulaHelpers:
    def test_mk_not_folds(self):
        phi = op("<", Var("x", INT), val(1))
        assert mk_not(mk_not(phi)) == phi
        assert mk_not(TRUE) == FALSE

    def test_mk_and_drops_true_and_flattens(self):
        a = op("<", Var("x", INT), val(1))
        b = op(">", Var("x", INT), val(-1))
        assert mk_and(a, TRUE) == a
        assert conjuncts(mk_and(mk_and(a, b), a)) == [a, b, a]

    def test_mk_and_empty_is_true(self):
        assert mk_and() == TRUE

    def test_conjuncts_of_atom(self):
        a = op("<", Var("x", INT), val(1))
        assert conjuncts(a) == [a]
        assert conjuncts(TRUE) == []

    def test_mk_or_mk_eq_sorts(self):
        a = op("<", Var("x", INT), val(1))
        b = op(">", Var("x", INT), val(3))
        assert mk_or(a, b).sort == BOOL
        assert mk_eq(val(1), val(2)).sort == BOOL


class TestTheoryTable:
    def test_unknown_theory(self):
        with pytest.raises(UnknownTheory):
            get_theory("Sets")

    def test_unknown_symbol(self):
        with pytest.raises(UnknownSymbol):
            INTS.op("bvadd", (INT, INT))

    def test_core_is_shared(self):
        reals = get_theory("Reals")
        assert reals.op("and", (BOOL, BOOL)).result == BOOL

    def test_bitvector_ops_are_width_indexed(self):
        bv = get_theory("FixedSizeBitVectors")
        s4, s8 = bitvec(4), bitvec(8)
        assert bv.op("bvadd", (s4, s4)).result == s4
        assert bv.op("bvadd", (s8, s8)).result == s8
        assert bv.op("bvult", (s4, s4)).result == BOOL

    def test_bv_arithmetic_wraps(self):
        bv = get_theory("FixedSizeBitVectors")
        s4 = bitvec(4)
        t = App(bv.op("bvadd", (s4, s4)), [value_term(15, s4), value_term(1, s4)])
        assert interpret(t) == (4, 0)
