"""Rewriting constrained terms: single, parallel, multi, and ground steps."""

import pytest

from conftest import load
from lctrs.ari import parse
from lctrs.rewrite import (
    NO,
    YES,
    ConstrainedTerm,
    all_steps,
    calc_steps,
    is_constrained_normal_form,
    is_trivial,
    multisteps,
    parallel_steps,
    parallel_steps_pos,
    plain_step_to,
    plain_steps,
    rule_steps,
)
from lctrs.smt import SmtSession
from lctrs.terms import App, FreshGen, INT, Var, variables
from lctrs.theory import (
    TRUE,
    conjuncts,
    get_theory,
    int_value,
    mk_and,
    mk_eq,
    mk_not,
)

INTS = get_theory("Ints")
z = Var("z", INT)


def val(n):
    return App(int_value(n))


def op(name, *args):
    return App(INTS.op(name, tuple(INT for _ in args)), list(args))


def system(rules: str):
    return parse(
        "(format LCTRS :smtlib 2.6)\n(theory Ints)\n"
        "(fun f (-> Int Int))\n(fun k (-> Int Int))\n" + rules
    )


@pytest.fixture(scope="module")
def session():
    with SmtSession("QF_NIA") as s:
        yield s


def fresh_for(problem, ct):
    gen = FreshGen(problem.all_rule_vars())
    gen.reserve(variables(ct.term) | variables(ct.constraint))
    return gen


class TestRuleSteps:
    def test_guard_with_leftover_variable_is_recorded(self, session):
        p = system("(rule (f x) y :guard (and (>= x 0) (> x y)))\n")
        ct = ConstrainedTerm(App(p.funs["f"], [z]), mk_eq(z, val(2)))
        (step,) = rule_steps(p, ct, session, fresh_for(p, ct))
        assert isinstance(step.result.term, Var)
        got = conjuncts(step.result.constraint)
        assert got[0] == mk_eq(z, val(2))
        assert got[1] == op(">=", z, val(0))
        assert got[2].sym.name == ">" and got[2].args[0] == z
        assert got[2].args[1] == step.result.term

    def test_fresh_variable_without_guard_link_gets_reflexive_equality(self, session):
        p = system("(rule (f x) y :guard (>= x 0))\n")
        ct = ConstrainedTerm(App(p.funs["f"], [z]), mk_eq(z, val(2)))
        (step,) = rule_steps(p, ct, session, fresh_for(p, ct))
        v = step.result.term
        got = conjuncts(step.result.constraint)
        assert got[:2] == [mk_eq(z, val(2)), op(">=", z, val(0))]
        assert got[2] == mk_eq(v, v)

    def test_fully_bound_guard_leaves_constraint_alone(self, session):
        p = load("ex3")
        x = Var("x", INT)
        phi = mk_and(op(">=", x, val(1)), op("<=", x, val(2)), mk_eq(x, val(1)))
        ct = ConstrainedTerm(App(p.funs["g"], [x]), phi)
        results = {
            s.result for s in rule_steps(p, ct, session, fresh_for(p, ct))
        }
        a = ConstrainedTerm(App(p.funs["a"]), phi)
        assert a in results  # same constraint object, nothing appended

    def test_unsatisfiable_guard_instance_blocks_the_step(self, session):
        p = system("(rule (f x) 0 :guard (> x 5))\n")
        ct = ConstrainedTerm(App(p.funs["f"], [z]), mk_eq(z, val(2)))
        assert list(rule_steps(p, ct, session, fresh_for(p, ct))) == []

    def test_steps_fire_below_the_root(self, session):
        p = system("(rule (f x) 0 :guard (= x 2))\n")
        inner = App(p.funs["f"], [z])
        ct = ConstrainedTerm(App(p.funs["k"], [inner]), mk_eq(z, val(2)))
        steps = list(rule_steps(p, ct, session, fresh_for(p, ct)))
        assert [s.pos for s in steps] == [(1,)]
        assert steps[0].result.term == App(p.funs["k"], [val(0)])


class TestCalcSteps:
    def test_theory_redex_moves_into_the_constraint(self):
        p = load("ex1")
        x = Var("x", INT)
        mx = p.funs["max"]
        ct = ConstrainedTerm(
            App(mx, [val(3), op("+", val(3), x)]), op(">=", x, val(0))
        )
        (step,) = calc_steps(p, ct, fresh_for(p, ct))
        assert step.pos == (2,)
        v = step.result.term.args[1]
        assert isinstance(v, Var) and v != x
        assert conjuncts(step.result.constraint) == [
            op(">=", x, val(0)),
            mk_eq(v, op("+", val(3), x)),
        ]

    def test_innermost_redex_is_found(self):
        p = load("ex1")
        x = Var("x", INT)
        t = App(p.funs["max"], [op("+", val(1), op("+", val(2), x)), val(0)])
        ct = ConstrainedTerm(t, mk_eq(x, val(0)))
        steps = list(calc_steps(p, ct, fresh_for(p, ct)))
        assert [s.pos for s in steps] == [(1, 2)]

    def test_values_and_variables_admit_no_calc_step(self):
        p = load("ex1")
        ct = ConstrainedTerm(App(p.funs["max"], [val(1), val(2)]), TRUE)
        # the max symbol itself is a term symbol, its value args are inert
        assert list(calc_steps(p, ct, fresh_for(p, ct))) == []


class TestPlainSteps:
    def test_calculation_inside_term_symbol(self):
        p = load("ex1")
        t = App(p.funs["max"], [op("+", val(3), val(2)), val(3)])
        succs = {s for s, _, _ in plain_steps(p, t)}
        assert succs == {App(p.funs["max"], [val(5), val(3)])}

    def test_rule_and_swap_successors(self):
        p = load("ex2")
        t = App(p.funs["max"], [val(5), val(3)])
        succs = {s for s, _, _ in plain_steps(p, t)}
        assert succs == {val(5), App(p.funs["max"], [val(3), val(5)])}

    def test_values_are_normal_forms(self):
        p = load("ex2")
        assert list(plain_steps(p, val(7))) == []

    def test_free_logical_variables_need_a_domain(self):
        p = load("ex5")  # a -> f(n) [n >= 0] introduces n out of thin air
        a = App(p.funs["a"])
        none = {s for s, _, _ in plain_steps(p, a)}
        some = {s for s, _, _ in plain_steps(p, a, domain={INT: range(0, 3)})}
        assert none == set()
        assert App(p.funs["f"], [val(2)]) in some

    def test_plain_step_to(self):
        p = load("ex2")
        t = App(p.funs["max"], [val(5), val(3)])
        assert plain_step_to(p, t, val(5))
        assert not plain_step_to(p, t, val(3))


class TestGroundReplay:
    """Models of a constrained step's result constraint are real steps."""

    def test_spec_shape_replays_on_ground_instances(self, session):
        p = system("(rule (f x) y :guard (and (>= x 0) (> x y)))\n")
        ct = ConstrainedTerm(App(p.funs["f"], [z]), mk_eq(z, val(2)))
        (step,) = rule_steps(p, ct, session, fresh_for(p, ct))
        phi = step.result.constraint
        wanted = sorted(variables(phi), key=lambda v: v.name)
        seen = 0
        blocked = phi
        for _ in range(5):
            model = session.find_values(blocked, wanted)
            if model is None:
                break
            start = App(p.funs["f"], [model[z]])
            end = model[step.result.term]
            assert plain_step_to(p, start, end, domain={INT: range(-8, 9)})
            # block this model and look for another
            picked = mk_and(*(mk_eq(v, t) for v, t in model.items()))
            blocked = mk_and(blocked, mk_not(picked))
            seen += 1
        assert seen >= 3


class TestParallelAndMulti:
    def test_empty_position_set_is_identity(self, session):
        p = load("fig1")
        t = App(p.funs["g"], [val(4), val(2)])
        ct = ConstrainedTerm(t, TRUE)
        results = list(parallel_steps(p, ct, session, fresh_for(p, ct)))
        assert ct in results

    def test_disjoint_redexes_commute(self, session):
        p = load("fig1")
        g42 = App(p.funs["g"], [val(4), val(2)])
        ct = ConstrainedTerm(App(p.funs["c"], [g42, g42]), TRUE)
        gen = fresh_for(p, ct)
        both = [res for res, ps in parallel_steps_pos(p, ct, session, gen) if len(ps) == 2]
        g24 = App(p.funs["g"], [val(2), val(4)])
        simultaneous = ConstrainedTerm(App(p.funs["c"], [g24, g24]), TRUE)
        assert simultaneous in both
        # sequentially, in either order, through single steps
        mid = ConstrainedTerm(App(p.funs["c"], [g24, g42]), TRUE)
        seq = {
            s2.result
            for s1 in all_steps(p, ct, session, gen)
            if s1.result == mid
            for s2 in all_steps(p, s1.result, session, gen)
        }
        assert simultaneous in seq

    def test_parallel_results_are_multistep_results(self, session):
        p = load("fig1")
        g42 = App(p.funs["g"], [val(4), val(2)])
        ct = ConstrainedTerm(App(p.funs["c"], [g42, g42]), TRUE)
        gen = fresh_for(p, ct)
        par = set(parallel_steps(p, ct, session, gen))
        multi = set(multisteps(p, ct, session, gen))
        assert par <= multi

    def test_multistep_is_reflexive(self, session):
        p = load("ex2")
        ct = ConstrainedTerm(App(p.funs["max"], [val(1), val(2)]), TRUE)
        assert ct in set(multisteps(p, ct, session, fresh_for(p, ct)))


class TestTriviality:
    def test_equal_under_constraint(self, session):
        x, y = Var("x", INT), Var("y", INT)
        phi = mk_and(op(">=", x, y), op(">=", y, x))
        assert is_trivial(x, y, phi, session) == YES

    def test_syntactic_identity(self, session):
        x, y = Var("x", INT), Var("y", INT)
        assert is_trivial(x, x, op(">=", x, y), session) == YES

    def test_distinct_constants(self, session):
        p = load("ex6")
        x = Var("x", INT)
        phi = mk_and(op("<", x, val(1)), op(">=", x, val(0)), op("<=", x, val(2)))
        assert is_trivial(App(p.funs["c"]), App(p.funs["a"]), phi, session) == NO

    def test_aligned_logical_subterms(self, session):
        p = load("ex3")
        x, y = Var("x", INT), Var("y", INT)
        f = p.funs["f"]
        assert is_trivial(App(f, [x]), App(f, [y]), mk_eq(x, y), session) == YES
        assert is_trivial(App(f, [x]), App(f, [y]), op(">=", x, y), session) == NO


class TestConstrainedNormalForm:
    def test_reducible_term(self, session):
        p = load("ex3")
        x = Var("x", INT)
        phi = mk_and(op(">=", x, val(1)), op("<=", x, val(2)))
        ct = ConstrainedTerm(App(p.funs["g"], [x]), phi)
        assert is_constrained_normal_form(p, ct, session) == NO

    def test_constants_without_rules(self, session):
        p = load("ex6")
        x = Var("x", INT)
        phi = mk_and(op("<", x, val(1)), op(">=", x, val(0)), op("<=", x, val(2)))
        for c in ("c", "a"):
            ct = ConstrainedTerm(App(p.funs[c]), phi)
            assert is_constrained_normal_form(p, ct, session) == YES

    def test_values(self, session):
        p = load("ex3")
        assert is_constrained_normal_form(p, ConstrainedTerm(val(3)), session) == YES

    def test_guard_refutes_every_instance(self, session):
        p = system("(rule (f x) 0 :guard (> x 5))\n")
        ct = ConstrainedTerm(App(p.funs["f"], [z]), op("<", z, val(0)))
        assert is_constrained_normal_form(p, ct, session) == YES
