"""Constrained critical pairs, rule merging, and constraint splitting."""

import itertools

import pytest

import groundtruth
from conftest import load
from lctrs.ari import parse
from lctrs.pairs import (
    compute_ccps,
    compute_cpcps,
    extended_rules,
    merge_rules,
    split_candidates,
    split_constraint,
)
from lctrs.rewrite import ConstrainedTerm, rule_steps
from lctrs.smt import SmtSession
from lctrs.terms import App, FreshGen, INT, Var, parallel_to, variables
from lctrs.theory import conjuncts, get_theory, int_value, interpret, mk_and, mk_not

INTS = get_theory("Ints")


def val(n):
    return App(int_value(n))


@pytest.fixture(scope="module")
def session():
    with SmtSession("QF_NIA") as s:
        yield s


def peak_steps_to_both_sides(problem, ccp, session):
    ct = ConstrainedTerm(ccp.peak, ccp.constraint)
    gen = FreshGen(problem.all_rule_vars())
    gen.reserve(variables(ccp.peak) | variables(ccp.constraint))
    succ = {s.result.term for s in rule_steps(problem, ct, session, gen)}
    return ccp.left in succ and ccp.right in succ


class TestCcps:
    @pytest.mark.parametrize("name", ["ex1", "ex2", "ex3", "ex7", "fig1"])
    def test_both_sides_are_successors_of_the_peak(self, session, name):
        p = load(name)
        ccps = compute_ccps(p, session)
        assert ccps
        for c in ccps:
            inner = p.rules[c.inner_index]
            if variables(inner.rhs) - variables(inner.lhs):
                # replaying picks its own fresh variable names
                continue
            assert peak_steps_to_both_sides(p, c, session), str(c)

    def test_commuting_max_yields_six_pairs(self, session):
        assert len(compute_ccps(load("ex2"), session)) == 6

    def test_variable_against_swapped_term_pair_shows_up(self, session):
        # one overlap leaves a variable against the swapped term
        found = False
        for c in compute_ccps(load("ex2"), session):
            if not isinstance(c.left, Var):
                continue
            if not (isinstance(c.right, App) and c.right.sym.name == "max"):
                continue
            (atom,) = conjuncts(c.constraint)
            if atom.sym.name == ">=" and atom.args[0] == c.left:
                found = True
        assert found

    def test_root_overlaps_are_flagged_overlay(self, session):
        for c in compute_ccps(load("ex3"), session):
            assert c.overlay and c.pos == ()

    def test_rules_with_fresh_rhs_variables_overlap_themselves(self, session):
        ccps = compute_ccps(load("ex5"), session)
        assert any(c.inner_index == c.outer_index for c in ccps)
        # and the fresh variables got reflexive guard equalities
        reflexive = [
            a for c in ccps for a in conjuncts(c.constraint)
            if a.sym.name == "=" and a.args[0] == a.args[1]
        ]
        assert reflexive

    def test_plain_variable_overlaps_are_not_critical(self, session):
        p = parse(
            "(format LCTRS :smtlib 2.6)\n(theory Ints)\n"
            "(fun f (-> Int Int))\n(fun k (-> Int Int))\n"
            "(rule (f x) (k x))\n"
        )
        assert compute_ccps(p, session) == []

    def test_proper_position_overlap(self, session):
        p = parse(
            "(format LCTRS :smtlib 2.6)\n(theory Ints)\n"
            "(fun a Int)\n(fun b Int)\n(fun k (-> Int Int Int))\n"
            "(rule (k a y) y)\n(rule a b)\n"
        )
        inner = [c for c in compute_ccps(p, session) if c.pos == (1,)]
        assert len(inner) == 1
        assert not inner[0].overlay
        left, right = inner[0].left, inner[0].right
        assert isinstance(right, Var)
        assert left == App(p.funs["k"], [App(p.funs["b"]), right])

    def test_unsatisfiable_overlaps_are_dropped(self, session):
        p = parse(
            "(format LCTRS :smtlib 2.6)\n(theory Ints)\n"
            "(fun f (-> Int Int))\n"
            "(rule (f x) 0 :guard (< x 0))\n(rule (f x) 1 :guard (> x 5))\n"
        )
        assert compute_ccps(p, session) == []
        # without a solver they are kept, soundly unclassified
        unchecked = compute_ccps(p, None)
        assert unchecked and all(c.sat is None for c in unchecked)


class TestMerge:
    def test_same_shape_rules_merge_into_a_disjunction(self):
        p = load("ex7", merge=False)
        merged = merge_rules(p.rules)
        h = [r for r in merged if r.lhs.sym.name == "h"]
        assert len(h) == 1
        assert h[0].guard.sym.name == "or"
        assert len(merged) == len(p.rules) - 1

    def test_merge_is_a_fixpoint(self):
        rules = merge_rules(load("ex7", merge=False).rules)
        assert merge_rules(rules) == rules

    def test_different_shapes_stay_apart(self):
        p = load("ex3", merge=False)
        assert merge_rules(p.rules) == p.rules

    def test_ground_one_step_relation_is_preserved(self):
        p = load("ex7", merge=False)
        q = p.with_rules(merge_rules(p.rules))
        values = range(-2, 6)
        for t in groundtruth.ground_terms(p, 5, values):
            assert groundtruth.ground_steps(p, t, values) == groundtruth.ground_steps(
                q, t, values
            ), str(t)


class TestExtendedRules:
    @pytest.mark.parametrize("name", ["countdown", "ex3"])
    def test_plain_lhss_add_no_calculation_rules(self, name):
        p = load(name)
        assert extended_rules(p) == list(p.rules)

    def test_lhs_theory_op_gets_a_calculation_rule(self, session):
        p = parse(
            "(format LCTRS :smtlib 2.6)\n(theory Ints)\n"
            "(fun f (-> Int Int))\n(rule (f (+ x y)) 0)\n"
        )
        extra = [r for r in extended_rules(p) if r.is_calc]
        assert len(extra) == 1
        calc = extra[0]
        assert calc.lhs.sym.name == "+"
        assert isinstance(calc.rhs, Var)
        eq = mk_and(*conjuncts(calc.guard))
        assert eq.sym.name == "=" and eq.args[0] == calc.rhs
        # and the calculation rule participates in overlaps
        ccps = compute_ccps(p, session)
        assert any(c.inner_calc for c in ccps)


class TestSplits:
    def _ex3_pair(self, session):
        p = load("ex3")
        ccps = compute_ccps(p, session)
        return p, next(c for c in ccps if c.left.sym.name == "g")

    def test_instantiated_guards_are_candidates(self, session):
        p, ccp = self._ex3_pair(session)
        cands = split_candidates((ccp.left, ccp.right), ccp.constraint, p, session)
        assert cands
        x = ccp.left.args[0]
        assert any(
            c.sym.name == "=" and c.args == (x, val(1)) for c in cands
        )
        for c in cands:
            assert variables(c) <= variables(ccp.constraint)

    def test_split_halves_partition_the_models(self, session):
        p, ccp = self._ex3_pair(session)
        cands = split_candidates((ccp.left, ccp.right), ccp.constraint, p, session)
        cand = cands[0]
        with_c, without_c = split_constraint(ccp.constraint, cand)
        assert conjuncts(with_c)[-1] == cand
        assert conjuncts(without_c)[-1] == mk_not(cand)
        wanted = sorted(variables(ccp.constraint), key=lambda v: v.name)
        blocked = ccp.constraint
        for _ in range(5):
            model = session.find_values(blocked, wanted)
            if model is None:
                break
            from lctrs.terms import apply_subst

            sides = [interpret(apply_subst(h, model)) for h in (with_c, without_c)]
            assert sides.count(True) == 1
            picked = mk_and(*(
                App(INTS.op("=", (INT, INT)), [v, t]) for v, t in model.items()
            ))
            blocked = mk_and(blocked, mk_not(picked))


class TestCpcps:
    def test_root_overlaps_appear_with_root_position_sets(self, session):
        cpcps = compute_cpcps(load("fig1"), session)
        assert len(cpcps) == 2
        assert all(c.positions == ((),) for c in cpcps)

    def test_two_parallel_occurrences_rewrite_together(self, session):
        p = parse(
            "(format LCTRS :smtlib 2.6)\n(theory Ints)\n"
            "(fun a Int)\n(fun b Int)\n(fun k (-> Int Int Int))\n"
            "(rule (k a a) 0)\n(rule a b)\n"
        )
        cpcps = compute_cpcps(p, session)
        pairsets = {c.positions for c in cpcps}
        assert ((1,), (2,)) in pairsets
        both = next(c for c in cpcps if c.positions == ((1,), (2,)))
        assert both.left == App(p.funs["k"], [App(p.funs["b"]), App(p.funs["b"])])
        assert both.right == val(0)

    def test_position_sets_are_pairwise_parallel(self, session):
        for name in ("fig1", "fig2", "ex7"):
            for c in compute_cpcps(load(name), session):
                for a, b in itertools.combinations(c.positions, 2):
                    assert parallel_to(a, b)
