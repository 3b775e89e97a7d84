"""Rewriting of constrained terms.

A constrained term pairs a term with a boolean constraint over its logical
variables.  A rule step is only taken when it is justified for *every*
instance of the constraint: bound logical variables must be matched to
values or constraint variables, and guards of unbound logical variables
must be witnessed uniformly (one witness that works under the whole
constraint).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .system import Problem, Rule
from .terms import (
    App,
    FreshGen,
    Term,
    Var,
    apply_subst,
    is_value,
    match,
    parallel_to,
    positions,
    replace_at,
    sort_of,
    subterm_at,
    variables,
)
from .theory import (
    TRUE,
    conjuncts,
    interpret,
    mk_and,
    mk_eq,
    mk_not,
    value_term,
)

_SAT, _UNSAT, _UNKNOWN = "sat", "unsat", "unknown"
_VALID = "valid"

_WITNESS_TRIES = 3

YES, NO, UNKNOWN = "yes", "no", "unknown"


@dataclass(frozen=True)
class ConstrainedTerm:
    term: Term
    constraint: Term = TRUE

    def __str__(self):
        return f"{self.term} [{self.constraint}]"


@dataclass(frozen=True)
class Step:
    """One rewrite step on a constrained term."""

    result: ConstrainedTerm
    pos: tuple
    rule_index: int
    kind: str  # "rule" | "calc"

    def __str__(self):
        where = "".join(map(str, self.pos)) or "root"
        return f"--{self.kind}:{self.rule_index}@{where}--> {self.result}"


def _logical_ok(image: Term, phi_vars: set) -> bool:
    return is_value(image) or (isinstance(image, Var) and image in phi_vars)


def _justify(rule: Rule, sigma: dict, constraint: Term, session, gen: FreshGen):
    """Check that *rule* applies under *constraint* with matcher *sigma*.

    Returns the new constraint conjuncts, or None if the step is not
    justified.  Unbound logical variables stay symbolic in the result; a
    uniform witness for them is only searched for to justify the step."""
    from .smt import SmtUnknown

    guard = apply_subst(rule.guard, sigma)
    unbound = sorted(
        (v for v in rule.lvar() if v not in sigma),
        key=lambda v: v.name,
    )
    if not unbound:
        # the guard instance is entailed, so it adds nothing to the result
        if session.check_valid(_implies(constraint, guard)) != _VALID:
            return None
        return []
    else:
        blocked: list = []
        found = False
        for _ in range(_WITNESS_TRIES):
            try:
                model = session.find_values(
                    mk_and(constraint, guard, *blocked), unbound
                )
            except SmtUnknown:
                return None
            if model is None:
                return None
            witness = {v: model[v] for v in unbound}
            instance = apply_subst(guard, witness)
            verdict = session.check_valid(_implies(constraint, instance))
            if verdict == _VALID:
                found = True
                break
            if verdict == _UNKNOWN:
                return None
            blocked.append(mk_not(mk_and(*[mk_eq(v, witness[v]) for v in unbound])))
        if not found:
            return None
        guard_vars = variables(guard)
        extras = [mk_eq(v, v) for v in unbound if v not in guard_vars]
    # the guard instance is recorded only when it introduces variables the
    # constraint does not know yet
    return conjuncts(guard) + extras


def _implies(a: Term, b: Term) -> Term:
    from .terms import FunSym, SymKind
    from .terms import BOOL

    if a == TRUE:
        return b
    return App(FunSym("=>", (BOOL, BOOL), BOOL, SymKind.THEORY), [a, b])


def rule_steps(problem: Problem, ct: ConstrainedTerm, session, gen: FreshGen):
    """All justified rule steps on *ct*, deterministic order."""
    phi_vars = variables(ct.constraint)
    for pos in positions(ct.term):
        target = subterm_at(ct.term, pos)
        if not isinstance(target, App) or is_value(target):
            continue
        for rule in problem.rules:
            if rule.lhs.sym != target.sym:
                continue
            variant = rule.rename(gen)
            sigma = match(variant.lhs, target)
            if sigma is None:
                continue
            if not all(
                _logical_ok(sigma[v], phi_vars)
                for v in variant.lvar()
                if v in sigma
            ):
                continue
            added = _justify(variant, sigma, ct.constraint, session, gen)
            if added is None:
                continue
            new_constraint = mk_and(ct.constraint, *added)
            new_term = replace_at(ct.term, pos, apply_subst(variant.rhs, sigma))
            yield Step(
                ConstrainedTerm(new_term, new_constraint),
                tuple(pos),
                rule.index,
                "rule",
            )


def calc_steps(problem: Problem, ct: ConstrainedTerm, gen: FreshGen):
    """Evaluation steps: a theory application over values and constraint
    variables is replaced by a fresh variable defined in the constraint."""
    phi_vars = variables(ct.constraint)
    for pos in positions(ct.term):
        target = subterm_at(ct.term, pos)
        if (
            not isinstance(target, App)
            or not target.sym.is_theory
            or is_value(target)
        ):
            continue
        if not all(_logical_ok(a, phi_vars) for a in target.args):
            continue
        fresh = gen.fresh("v", sort_of(target))
        new_constraint = mk_and(ct.constraint, mk_eq(fresh, target))
        yield Step(
            ConstrainedTerm(replace_at(ct.term, pos, fresh), new_constraint),
            tuple(pos),
            -1,
            "calc",
        )


def all_steps(problem: Problem, ct: ConstrainedTerm, session, gen: FreshGen):
    yield from rule_steps(problem, ct, session, gen)
    yield from calc_steps(problem, ct, gen)


# -------------------------------------------------------------- parallel steps


def parallel_steps(problem: Problem, ct: ConstrainedTerm, session, gen: FreshGen,
                   max_results: int = 600):
    """Parallel rewriting: every simultaneous application of single steps at
    pairwise parallel positions (the empty set gives the term itself)."""
    for result, _positions in parallel_steps_pos(problem, ct, session, gen,
                                                 max_results):
        yield result


def parallel_steps_pos(problem: Problem, ct: ConstrainedTerm, session,
                       gen: FreshGen, max_results: int = 600):
    """Like parallel_steps, but pairs each result with its position set."""
    singles = list(all_steps(problem, ct, session, gen))
    yield ct, frozenset()  # empty position set
    count = 0
    for k in range(1, len(singles) + 1):
        for combo in itertools.combinations(singles, k):
            ok = all(
                parallel_to(a.pos, b.pos)
                for a, b in itertools.combinations(combo, 2)
            )
            if not ok:
                continue
            term = ct.term
            constraint = ct.constraint
            good = True
            for step in sorted(combo, key=lambda s: s.pos):
                redo = _replay_at(problem, ConstrainedTerm(term, constraint),
                                  step, session, gen)
                if redo is None:
                    good = False
                    break
                term, constraint = redo.result.term, redo.result.constraint
            if good:
                yield ConstrainedTerm(term, constraint), frozenset(
                    s.pos for s in combo)
                count += 1
                if count >= max_results:
                    return


def _replay_at(problem: Problem, ct: ConstrainedTerm, step: Step, session, gen):
    """Re-run one recorded step on a (possibly updated) constrained term."""
    if step.kind == "calc":
        for s in calc_steps(problem, ct, gen):
            if s.pos == step.pos:
                return s
        return None
    rule = problem.rules[step.rule_index]
    target = subterm_at(ct.term, step.pos)
    variant = rule.rename(gen)
    sigma = match(variant.lhs, target)
    if sigma is None:
        return None
    phi_vars = variables(ct.constraint)
    if not all(
        _logical_ok(sigma[v], phi_vars) for v in variant.lvar() if v in sigma
    ):
        return None
    added = _justify(variant, sigma, ct.constraint, session, gen)
    if added is None:
        return None
    return Step(
        ConstrainedTerm(
            replace_at(ct.term, step.pos, apply_subst(variant.rhs, sigma)),
            mk_and(ct.constraint, *added),
        ),
        step.pos,
        rule.index,
        "rule",
    )


# ------------------------------------------------------------------ multisteps


def multisteps(problem: Problem, ct: ConstrainedTerm, session, gen: FreshGen,
               descents: int = 2, max_results: int = 400):
    """Nested simultaneous rewriting.  *descents* bounds how deep rule
    applications may nest inside matcher images (a root application is
    free, each recursion into the images costs one)."""
    budget = [max_results]
    for term, constraint in _msteps(problem, ct.term, ct.constraint, session,
                                    gen, descents, budget):
        yield ConstrainedTerm(term, constraint)


def _msteps(problem, term, constraint, session, gen, descents, budget):
    if budget[0] <= 0:
        return
    budget[0] -= 1
    yield term, constraint
    if isinstance(term, Var):
        return
    # congruence: rewrite the arguments independently (shared constraint)
    if term.args:
        for combo in _arg_products(problem, list(term.args), constraint, session,
                                   gen, descents, budget):
            args, c2 = combo
            if list(args) != list(term.args):
                yield App(term.sym, args), c2
    # rule application at the root, matcher images rewritten first
    phi_vars = variables(constraint)
    if not term.sym.is_theory:
        for rule in problem.rules:
            if rule.lhs.sym != term.sym:
                continue
            variant = rule.rename(gen)
            sigma = match(variant.lhs, term)
            if sigma is None:
                continue
            if not all(
                _logical_ok(sigma[v], phi_vars)
                for v in variant.lvar()
                if v in sigma
            ):
                continue
            added = _justify(variant, sigma, constraint, session, gen)
            if added is None:
                continue
            base_constraint = mk_and(constraint, *added)
            dom = sorted(sigma, key=lambda v: v.name)
            if descents > 0 and dom:
                for images, c3 in _image_products(
                    problem, [sigma[v] for v in dom], base_constraint, session,
                    gen, descents - 1, budget
                ):
                    tau = dict(zip(dom, images))
                    yield apply_subst(variant.rhs, tau), c3
            else:
                yield apply_subst(variant.rhs, sigma), base_constraint
    elif not is_value(term) and all(_logical_ok(a, phi_vars) for a in term.args):
        fresh = gen.fresh("v", sort_of(term))
        yield fresh, mk_and(constraint, mk_eq(fresh, term))


def _arg_products(problem, args, constraint, session, gen, descents, budget):
    if not args:
        yield [], constraint
        return
    head, rest = args[0], args[1:]
    for h, c1 in _msteps(problem, head, constraint, session, gen, descents, budget):
        for tail, c2 in _arg_products(problem, rest, c1, session, gen, descents,
                                      budget):
            yield [h] + tail, c2


def _image_products(problem, images, constraint, session, gen, descents, budget):
    # like _arg_products, but each image itself is a full multistep source
    if not images:
        yield [], constraint
        return
    head, rest = images[0], images[1:]
    for h, c1 in _msteps(problem, head, constraint, session, gen, descents, budget):
        for tail, c2 in _image_products(problem, rest, c1, session, gen,
                                        descents, budget):
            yield [h] + tail, c2


# ------------------------------------------------------------- plain rewriting


def plain_steps(problem: Problem, term: Term, domain=None):
    """Unconstrained rewriting on ground terms: guards must evaluate to
    true.  *domain* maps sorts to candidate values for rule variables that
    the left-hand side does not bind."""
    for pos in positions(term):
        target = subterm_at(term, pos)
        if not isinstance(target, App) or is_value(target):
            continue
        if target.sym.is_theory:
            if all(is_value(a) for a in target.args):
                from .theory import calc_result

                yield replace_at(term, pos, calc_result(target)), pos, -1
            continue
        for rule in problem.rules:
            if rule.lhs.sym != target.sym:
                continue
            sigma = match(rule.lhs, target)
            if sigma is None:
                continue
            if any(not is_value(sigma[v]) for v in rule.lvar() & set(sigma)):
                continue
            free = sorted(
                rule.lvar() - set(sigma) | (variables(rule.rhs) - set(sigma) - rule.lvar()),
                key=lambda v: v.name,
            )
            for assignment in _domain_assignments(free, domain):
                full = dict(sigma)
                full.update(assignment)
                guard = apply_subst(rule.guard, full)
                try:
                    holds = interpret(guard)
                except Exception:
                    continue
                if holds is True:
                    yield apply_subst(rule.rhs, full), pos, rule.index


def _domain_assignments(free, domain):
    if not free:
        yield {}
        return
    if domain is None:
        return
    pools = []
    for v in free:
        vals = domain.get(v.sort)
        if not vals:
            return
        pools.append([(v, value_term(x, v.sort) if not isinstance(x, (App,)) else x)
                      for x in vals])
    for combo in itertools.product(*pools):
        yield dict(combo)


def plain_step_to(problem: Problem, s: Term, t: Term, domain=None) -> bool:
    return any(u == t for u, _, _ in plain_steps(problem, s, domain))


# ------------------------------------------------------------------ triviality


def is_trivial(s: Term, t: Term, constraint: Term, session) -> str:
    """Is s ~ t [constraint] trivial: do the sides coincide under every
    assignment respecting the constraint?"""
    phi_vars = variables(constraint)
    eqs = []
    stack = [(s, t)]
    while stack:
        a, b = stack.pop()
        if a == b:
            continue
        a_atom = _logical_ok(a, phi_vars)
        b_atom = _logical_ok(b, phi_vars)
        if a_atom and b_atom:
            eqs.append(mk_eq(a, b))
            continue
        if (
            isinstance(a, App)
            and isinstance(b, App)
            and a.sym == b.sym
            and not (a_atom or b_atom)
        ):
            stack.extend(zip(a.args, b.args))
            continue
        # structural mismatch: trivial only if the constraint is vacuous
        verdict = session.check_sat(constraint)
        if verdict == _UNSAT:
            return YES
        if verdict == _SAT:
            return NO
        return UNKNOWN
    if not eqs:
        return YES
    verdict = session.check_valid(_implies(constraint, mk_and(*eqs)))
    if verdict == _VALID:
        return YES
    if verdict == _UNKNOWN:
        return UNKNOWN
    # some model separates the sides; if the constraint is satisfiable the
    # equation genuinely fails
    sat = session.check_sat(constraint)
    if sat == _UNSAT:
        return YES
    if sat == _SAT:
        return NO
    return UNKNOWN


# --------------------------------------------------------- normal form check


def _reachable_sorts(problem: Problem, start) -> set:
    out = {start}
    changed = True
    syms = list(problem.funs.values())
    while changed:
        changed = False
        for f in syms:
            if f.result in out:
                for s in f.arg_sorts:
                    if s not in out:
                        out.add(s)
                        changed = True
    return out


def is_constrained_normal_form(problem: Problem, ct: ConstrainedTerm, session) -> str:
    """Definition of a constrained normal form: no instance respecting the
    constraint admits any rewrite step."""
    phi = ct.constraint
    sat = session.check_sat(phi)
    if sat == _UNSAT:
        return YES
    phi_vars = variables(phi)
    # any theory application might become evaluable in some instance
    for pos in positions(ct.term):
        sub = subterm_at(ct.term, pos)
        if isinstance(sub, App) and sub.sym.is_theory and not is_value(sub):
            return NO
    # a non-logical variable can be instantiated by any term of its sort
    usable_rule_sorts = set()
    for rule in problem.rules:
        if session.check_sat(rule.guard) == _SAT:
            usable_rule_sorts.add(sort_of(rule.lhs))
    for v in variables(ct.term) - phi_vars:
        if _reachable_sorts(problem, v.sort) & usable_rule_sorts:
            return NO
    unknown_seen = sat == _UNKNOWN
    gen = FreshGen(variables(ct.term) | phi_vars)
    for pos in positions(ct.term):
        target = subterm_at(ct.term, pos)
        if not isinstance(target, App) or target.sym.is_theory:
            continue
        for rule in problem.rules:
            if rule.lhs.sym != target.sym:
                continue
            variant = rule.rename(gen)
            verdict = _generalized_match(variant, target, phi, phi_vars, session)
            if verdict == NO:
                return NO
            if verdict == UNKNOWN:
                unknown_seen = True
    return UNKNOWN if unknown_seen else YES


def _generalized_match(rule: Rule, target: Term, phi: Term, phi_vars, session) -> str:
    """Could some instance of *target* (respecting phi) match *rule*?
    Returns NO when a matching instance exists (a step applies), YES when
    refuted, UNKNOWN otherwise."""
    logical = rule.lvar()
    eqs = []
    bindings: dict = {}
    possible = True

    def walk(lp: Term, sp: Term) -> bool:
        nonlocal possible
        if isinstance(lp, Var):
            if lp in logical:
                if _logical_ok(sp, phi_vars):
                    eqs.append(mk_eq(lp, sp))
                    return True
                if isinstance(sp, Var):  # term variable: instance may be a value
                    eqs.append(mk_eq(lp, lp))
                    return True
                if isinstance(sp, App) and sp.sym.is_theory:
                    return False  # instances stay non-value applications
                return False
            prev = bindings.get(lp)
            if prev is None:
                bindings[lp] = sp
                return True
            if prev == sp:
                return True
            if _logical_ok(prev, phi_vars) and _logical_ok(sp, phi_vars):
                eqs.append(mk_eq(prev, sp))
                return True
            possible = False  # cannot tell; stay conservative
            return True
        if isinstance(sp, Var):
            if sp in phi_vars:
                # instance of sp is a value; lp is an application
                if lp.sym.is_theory:
                    eqs.append(mk_eq(sp, lp))
                    return True
                return False
            return True  # free term variable: can be instantiated to match
        if is_value(sp) and isinstance(lp, App) and lp.sym.is_theory and not is_value(lp):
            eqs.append(mk_eq(sp, lp))
            return True
        if lp.sym != sp.sym:
            return False
        return all(walk(a, b) for a, b in zip(lp.args, sp.args))

    if not walk(rule.lhs, target):
        return YES
    if not possible:
        return NO  # conservatively treat as reducible
    query = mk_and(phi, rule.guard, *eqs)
    verdict = session.check_sat(query)
    if verdict == _SAT:
        return NO
    if verdict == _UNSAT:
        return YES
    return UNKNOWN
