"""Overlap analysis: critical pairs, parallel critical pairs, guard
splitting and rule merging.

Solver sessions are passed in by the caller; anything here works with any
object offering ``check_sat``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .system import Problem, Rule, calculation_rule
from .terms import (
    App,
    FreshGen,
    Term,
    Var,
    apply_subst,
    fun_positions,
    is_value,
    match,
    parallel_to,
    positions,
    replace_at,
    subterm_at,
    unify,
    variables,
)
from .theory import TRUE, conjuncts, mk_and, mk_eq, mk_not, mk_or

_SAT, _UNSAT = "sat", "unsat"

_MAX_PARALLEL_COMBOS = 20_000


class OverlapExplosion(Exception):
    """Raised when enumerating parallel overlaps becomes intractable."""


# ------------------------------------------------------------------- merging


def _guard_renaming(src: Rule, dst: Rule):
    """Renaming sigma with src.lhs*sigma == dst.lhs, src.rhs*sigma == dst.rhs
    and Var(src.guard * sigma) == Var(dst.guard), or None."""
    sigma = match(src.lhs, dst.lhs)
    if sigma is None:
        return None
    sigma = match(src.rhs, dst.rhs, sigma)
    if sigma is None:
        return None
    if any(not isinstance(v, Var) for v in sigma.values()):
        return None
    if len(set(sigma.values())) != len(sigma):
        return None
    gsrc = variables(src.guard)
    gdst = variables(dst.guard)
    mapped = {sigma[v] for v in gsrc if v in sigma}
    if not mapped <= gdst:
        return None
    rem_src = sorted(gsrc - set(sigma), key=lambda v: v.name)
    rem_dst = gdst - mapped
    if len(rem_src) != len(rem_dst):
        return None
    pool: dict = {}
    for v in sorted(rem_dst, key=lambda v: v.name):
        pool.setdefault(v.sort, []).append(v)
    for v in rem_src:
        stock = pool.get(v.sort)
        if not stock:
            return None
        sigma[v] = stock.pop(0)
    return sigma


def merge_rules(rules) -> list:
    """Collapse rules that differ only in their guard into one rule with the
    disjunction of the guards.  Applied to a fixpoint, keeping lower indices."""
    rules = list(rules)
    changed = True
    while changed:
        changed = False
        for i in range(len(rules)):
            if rules[i].is_calc:
                continue
            for j in range(i + 1, len(rules)):
                if rules[j].is_calc:
                    continue
                sigma = _guard_renaming(rules[j], rules[i])
                if sigma is None:
                    continue
                guard = mk_or(rules[i].guard, apply_subst(rules[j].guard, sigma))
                rules[i] = Rule(
                    rules[i].lhs, rules[i].rhs, guard, rules[i].index, rules[i].is_calc
                )
                del rules[j]
                changed = True
                break
            if changed:
                break
    return rules


# ------------------------------------------------------------ critical pairs


@dataclass
class CriticalPair:
    """Result of overlapping one rule into another below a constraint.

    ``left`` is the side produced by the inner rule, ``right`` the one
    produced by the outer rule."""

    left: Term
    right: Term
    constraint: Term
    pos: tuple
    peak: Term
    inner_index: int
    outer_index: int
    inner_calc: bool = False
    sat: "str | None" = None

    @property
    def overlay(self) -> bool:
        return self.pos == ()

    def __str__(self):
        return f"{self.left} ~ {self.right} [{self.constraint}]"


def _variants(r1: Rule, r2: Rule) -> bool:
    if r1 is r2:
        return True
    sigma = match(r1.lhs, r2.lhs)
    if sigma is None:
        return False
    sigma = match(r1.rhs, r2.rhs, sigma)
    if sigma is None:
        return False
    sigma = match(r1.guard, r2.guard, sigma)
    if sigma is None:
        return False
    images = list(sigma.values())
    return all(isinstance(v, Var) for v in images) and len(set(images)) == len(images)


def _extension_constraint(rule: Rule):
    """x = x for each rhs variable absent from the lhs, keeping those
    variables visible in the overlap constraint."""
    out = []
    for v in sorted(rule.rhs_fresh(), key=lambda v: v.name):
        out.append(mk_eq(v, v))
    return out


def extended_rules(problem: Problem) -> list:
    """Rewrite rules plus calculation rules for the theory operations that
    occur inside left-hand sides."""
    gen = FreshGen(problem.all_rule_vars())
    return list(problem.rules) + [
        calculation_rule(op, gen) for op in problem.lhs_theory_ops()
    ]


def compute_ccps(problem: Problem, session=None) -> list:
    """All constrained critical pairs between (variants of) rule pairs.

    Overlaps of two calculation rules are skipped: both steps compute the
    same value, so the resulting peak is always joinable."""
    pool = extended_rules(problem)
    gen = FreshGen(problem.all_rule_vars())
    out = []
    for inner in pool:
        for outer in pool:
            if outer.is_calc:
                continue  # nothing can overlap strictly inside f(x1..xn)=y
            for pos in fun_positions(outer.lhs):
                target = subterm_at(outer.lhs, pos)
                if is_value(target):
                    continue
                if (
                    pos == ()
                    and _variants(inner, outer)
                    and inner.rhs_fresh() == set()
                ):
                    continue
                r1 = inner.rename(gen)
                r2 = outer.rename(gen)
                t2 = subterm_at(r2.lhs, pos)
                restricted = frozenset(r1.lvar() | r2.lvar())
                sigma = unify(r1.lhs, t2, value_restricted=restricted)
                if sigma is None:
                    continue
                parts = (
                    conjuncts(apply_subst(r1.guard, sigma))
                    + conjuncts(apply_subst(r2.guard, sigma))
                    + [apply_subst(c, sigma) for c in _extension_constraint(r1)]
                    + [apply_subst(c, sigma) for c in _extension_constraint(r2)]
                )
                constraint = mk_and(*parts)
                verdict = None
                if session is not None:
                    verdict = session.check_sat(constraint)
                    if verdict == _UNSAT:
                        continue
                peak = apply_subst(r2.lhs, sigma)
                left = replace_at(peak, pos, apply_subst(r1.rhs, sigma))
                right = apply_subst(r2.rhs, sigma)
                out.append(
                    CriticalPair(
                        left,
                        right,
                        constraint,
                        tuple(pos),
                        peak,
                        inner.index,
                        outer.index,
                        inner_calc=inner.is_calc,
                        sat=verdict,
                    )
                )
    return out


# --------------------------------------------------- parallel critical pairs


@dataclass
class ParallelCriticalPair:
    """Several parallel inner overlaps into one left-hand side."""

    left: Term
    right: Term
    constraint: Term
    positions: tuple
    peak: Term
    inner_indices: tuple
    outer_index: int
    sat: "str | None" = None

    def __str__(self):
        ps = ", ".join("".join(map(str, p)) or "root" for p in self.positions)
        return f"{self.left} ~ {self.right} [{self.constraint}] at {{{ps}}}"


def _antichains(pos_list):
    """Nonempty pairwise-parallel subsets, smallest first, in stable order."""
    pos_list = list(pos_list)
    n = len(pos_list)
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            ps = [pos_list[i] for i in combo]
            if all(
                parallel_to(ps[i], ps[j])
                for i in range(len(ps))
                for j in range(i + 1, len(ps))
            ):
                yield tuple(ps)


def compute_cpcps(problem: Problem, session=None) -> list:
    pool = extended_rules(problem)
    gen = FreshGen(problem.all_rule_vars())
    out = []
    for outer in problem.rules:
        if outer.is_calc:
            continue
        pos_all = [
            p
            for p in fun_positions(outer.lhs)
            if not is_value(subterm_at(outer.lhs, p))
        ]
        combos = 0
        for pset in _antichains(pos_all):
            for inners in itertools.product(pool, repeat=len(pset)):
                combos += 1
                if combos > _MAX_PARALLEL_COMBOS:
                    raise OverlapExplosion(
                        f"too many parallel overlaps for rule {outer.index}"
                    )
                if pset == ((),):
                    inner = inners[0]
                    if _variants(inner, outer) and inner.rhs_fresh() == set():
                        continue
                    if inner.is_calc:
                        continue  # cannot overlap a term root
                r2 = outer.rename(gen)
                variants = [r.rename(gen) for r in inners]
                restricted = set(r2.lvar())
                for v in variants:
                    restricted |= v.lvar()
                sigma: dict = {}
                ok = True
                for p, rv in zip(pset, variants):
                    target = subterm_at(r2.lhs, p)
                    target = apply_subst(target, sigma)
                    lhs = apply_subst(rv.lhs, sigma)
                    more = unify(lhs, target, value_restricted=frozenset())
                    if more is None:
                        ok = False
                        break
                    sigma = {k: apply_subst(v, more) for k, v in sigma.items()}
                    sigma.update(more)
                if not ok:
                    continue
                for x in restricted:
                    img = sigma.get(x, x)
                    if not (isinstance(img, Var) or is_value(img)):
                        ok = False
                        break
                if not ok:
                    continue
                parts = conjuncts(apply_subst(r2.guard, sigma))
                for rv in variants:
                    parts += conjuncts(apply_subst(rv.guard, sigma))
                parts += [apply_subst(c, sigma) for c in _extension_constraint(r2)]
                for rv in variants:
                    parts += [apply_subst(c, sigma) for c in _extension_constraint(rv)]
                constraint = mk_and(*parts)
                verdict = None
                if session is not None:
                    verdict = session.check_sat(constraint)
                    if verdict == _UNSAT:
                        continue
                peak = apply_subst(r2.lhs, sigma)
                left = peak
                for p, rv in zip(pset, variants):
                    left = replace_at(left, p, apply_subst(rv.rhs, sigma))
                out.append(
                    ParallelCriticalPair(
                        left,
                        apply_subst(r2.rhs, sigma),
                        constraint,
                        tuple(tuple(p) for p in pset),
                        peak,
                        tuple(r.index for r in inners),
                        outer.index,
                        sat=verdict,
                    )
                )
    return out


def term_vars_through(term: Term, constraint: Term, pos_set) -> set:
    """Variables of the subterms at *pos_set* that the constraint does not
    mention (the ones a closing step is allowed to touch)."""
    out: set = set()
    for p in pos_set:
        out |= variables(subterm_at(term, p))
    return out - variables(constraint)


# ------------------------------------------------------------ guard splitting


def split_candidates(sides, constraint: Term, problem: Problem, session) -> list:
    """Instantiated rule guards usable to case-split *constraint*.

    A candidate must only mention variables of the constraint, be
    satisfiable together with it and not be entailed by it."""
    phi_vars = variables(constraint)
    seen = set()
    out = []
    for side in sides:
        for p in positions(side):
            u = subterm_at(side, p)
            if not isinstance(u, App) or is_value(u):
                continue
            for rule in problem.rules:
                if rule.is_calc or rule.guard == TRUE:
                    continue
                sigma = match(rule.lhs, u)
                if sigma is None:
                    continue
                cand = apply_subst(rule.guard, sigma)
                if cand in seen:
                    continue
                seen.add(cand)
                if not variables(cand) <= phi_vars:
                    continue
                if session.check_sat(mk_and(constraint, cand)) != _SAT:
                    continue
                if session.check_sat(mk_and(constraint, mk_not(cand))) != _SAT:
                    continue
                out.append(cand)
    return out


def split_constraint(constraint: Term, candidate: Term) -> tuple:
    return mk_and(constraint, candidate), mk_and(constraint, mk_not(candidate))
