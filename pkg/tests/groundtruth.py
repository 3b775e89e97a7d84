"""Brute-force ground-rewriting oracles and a random-system generator.

Deliberately independent of the library's rewriting engine: matching,
guard evaluation, stepping and reachability are reimplemented from
scratch here, so the provers can be cross-checked against them.
"""
from __future__ import annotations

import itertools
import random

from lctrs.system import Problem, Rule
from lctrs.terms import App, FunSym, INT, SymKind, Term, Var
from lctrs.theory import TRUE, get_theory, mk_and, value_term


class Explosion(Exception):
    """The brute-force search exceeded its node budget."""


# ----------------------------------------------------------------- term ops


def eval_ground(t: Term):
    """Value of a ground logical term (ints and booleans only)."""
    if isinstance(t, Var):
        raise ValueError(f"not ground: {t}")
    if t.sym.is_value:
        return t.sym.payload
    args = [eval_ground(a) for a in t.args]
    name = t.sym.name
    if name == "+":
        return args[0] + args[1]
    if name == "-":
        return -args[0] if len(args) == 1 else args[0] - args[1]
    if name == "*":
        return args[0] * args[1]
    if name == "<":
        return args[0] < args[1]
    if name == "<=":
        return args[0] <= args[1]
    if name == ">":
        return args[0] > args[1]
    if name == ">=":
        return args[0] >= args[1]
    if name == "=":
        return args[0] == args[1]
    if name == "distinct":
        return args[0] != args[1]
    if name == "and":
        return all(args)
    if name == "or":
        return any(args)
    if name == "not":
        return not args[0]
    if name == "ite":
        return args[1] if args[0] else args[2]
    raise ValueError(f"no evaluation for {name}")


def match(pattern: Term, term: Term, binding=None):
    binding = dict(binding or {})
    stack = [(pattern, term)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Var):
            if p in binding:
                if binding[p] != t:
                    return None
            else:
                binding[p] = t
            continue
        if not isinstance(t, App) or p.sym != t.sym:
            return None
        stack.extend(zip(p.args, t.args))
    return binding


def subst(t: Term, binding) -> Term:
    if isinstance(t, Var):
        return binding.get(t, t)
    return App(t.sym, [subst(a, binding) for a in t.args])


def term_vars(t: Term) -> set:
    if isinstance(t, Var):
        return {t}
    out: set = set()
    for a in t.args:
        out |= term_vars(a)
    return out


def positions(t: Term):
    out = [()]
    if isinstance(t, App):
        for i, a in enumerate(t.args):
            out.extend((i,) + p for p in positions(a))
    return out


def at(t: Term, pos):
    for i in pos:
        t = t.args[i]
    return t


def put(t: Term, pos, new: Term) -> Term:
    if not pos:
        return new
    args = list(t.args)
    args[pos[0]] = put(args[pos[0]], pos[1:], new)
    return App(t.sym, args)


def is_value_term(t: Term) -> bool:
    return isinstance(t, App) and t.sym.is_value


# ------------------------------------------------------------ ground steps


def ground_steps(problem: Problem, term: Term, values) -> set:
    """One-step plain successors of a ground term.  *values* supplies the
    candidates for rule variables the matcher leaves unbound."""
    out = set()
    for pos in positions(term):
        sub = at(term, pos)
        if not isinstance(sub, App) or sub.sym.is_value:
            continue
        if sub.sym.is_theory:
            if all(is_value_term(a) for a in sub.args):
                out.add(put(term, pos, value_term(eval_ground(sub), sub.sym.result)))
            continue
        for rule in problem.rules:
            if rule.lhs.sym != sub.sym:
                continue
            binding = match(rule.lhs, sub)
            if binding is None:
                continue
            # logical variables may only stand for values
            logical = term_vars(rule.guard) | (term_vars(rule.rhs) - term_vars(rule.lhs))
            if any(v in binding and not is_value_term(binding[v]) for v in logical):
                continue
            free = sorted(rule.all_vars() - set(binding), key=lambda v: v.name)
            pools = [[value_term(v, var.sort) for v in values] for var in free]
            for combo in itertools.product(*pools):
                full = dict(binding)
                full.update(zip(free, combo))
                try:
                    holds = eval_ground(subst(rule.guard, full))
                except ValueError:
                    continue
                if holds is True:
                    out.add(put(term, pos, subst(rule.rhs, full)))
    return out


def reachable(problem: Problem, term: Term, depth: int, values, cap=4000) -> set:
    seen = {term}
    frontier = {term}
    for _ in range(depth):
        grown = set()
        for t in frontier:
            grown |= ground_steps(problem, t, values) - seen
        seen |= grown
        if len(seen) > cap:
            raise Explosion(f"{len(seen)} terms reached")
        frontier = grown
        if not frontier:
            break
    return seen


def joinable(problem: Problem, s: Term, t: Term, depth: int, values, cap=4000) -> bool:
    if s == t:
        return True
    return bool(
        reachable(problem, s, depth, values, cap)
        & reachable(problem, t, depth, values, cap)
    )


def peaks(problem: Problem, term: Term, values):
    succ = sorted(ground_steps(problem, term, values), key=str)
    for i in range(len(succ)):
        for j in range(i + 1, len(succ)):
            yield succ[i], succ[j]


def halts(problem: Problem, term: Term, depth: int, values, budget=20000) -> bool:
    """Does every rewrite sequence from *term* end within *depth* steps?"""
    proven: set = set()
    used = [0]

    def ok(t: Term, d: int) -> bool:
        if t in proven:
            return True
        used[0] += 1
        if used[0] > budget:
            raise Explosion("halting check budget exceeded")
        succ = ground_steps(problem, t, values)
        if not succ:
            proven.add(t)
            return True
        if d == 0:
            return False
        if all(ok(s, d - 1) for s in succ):
            proven.add(t)
            return True
        return False

    return ok(term, depth)


# ------------------------------------------------------- term enumeration


def ground_terms(problem: Problem, max_size: int, values) -> list:
    """Ground terms over the problem's term symbols with value leaves,
    up to *max_size* symbol occurrences."""
    leaves = [value_term(v, INT) for v in values]
    syms = problem.term_symbols()
    by_size = {1: leaves + [App(f) for f in syms if f.arity == 0]}
    for size in range(2, max_size + 1):
        layer = []
        for f in syms:
            if f.arity == 0 or f.arity > size - 1:
                continue
            for split in _compositions(size - 1, f.arity):
                pools = [by_size.get(s, []) for s in split]
                for args in itertools.product(*pools):
                    if all(a.sym.result == s for a, s in zip(args, f.arg_sorts)):
                        layer.append(App(f, list(args)))
        by_size[size] = layer
    out = []
    for size in range(1, max_size + 1):
        out.extend(by_size[size])
    return out


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(1, total - parts + 2):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


# ---------------------------------------------------------- random systems

_RULE_VALUES = list(range(-2, 3))
# slightly wider than the rule constants so every satisfiable guard
# conjunction has a witness inside the enumerated universe
ORACLE_VALUES = list(range(-3, 4))

_CMPS = ["<", "<=", ">=", ">", "="]


def random_system(rng: random.Random) -> Problem:
    """A small random LCTRS over the integers: at most 3 rules, constants
    in {-2..2}, terms of depth at most 3."""
    th = get_theory("Ints")
    f = FunSym("f", (INT,), INT, SymKind.TERM)
    g = FunSym("g", tuple([INT] * rng.choice([1, 2])), INT, SymKind.TERM)
    c = FunSym("c", (), INT, SymKind.TERM)
    funs = {s.name: s for s in (f, g, c)}
    x, y, w = Var("x", INT), Var("y", INT), Var("w", INT)

    def value():
        return value_term(rng.choice(_RULE_VALUES), INT)

    def pattern_arg(vars_pool):
        r = rng.random()
        if r < 0.6:
            return rng.choice(vars_pool)
        if r < 0.85:
            return value()
        return App(f, [rng.choice(vars_pool)])

    def rhs_term(vars_pool, depth):
        r = rng.random()
        if depth == 0 or r < 0.35:
            return rng.choice(vars_pool) if rng.random() < 0.6 else value()
        if r < 0.55:
            op = th.op(rng.choice(["+", "-"]), (INT, INT))
            return App(op, [rhs_term(vars_pool, 0), rhs_term(vars_pool, 0)])
        sym = rng.choice([f, g, c])
        return App(sym, [rhs_term(vars_pool, depth - 1) for _ in range(sym.arity)])

    def atom(var):
        op = th.op(rng.choice(_CMPS), (INT, INT))
        return App(op, [var, value()])

    rules = []
    for _ in range(rng.randint(1, 3)):
        root = rng.choice([f, g, c])
        lhs_args = [pattern_arg([x, y]) for _ in range(root.arity)]
        lhs = App(root, lhs_args)
        lhs_vars = sorted(term_vars(lhs), key=lambda v: v.name) or [x]
        pool = list(lhs_vars)
        guard_parts = []
        if rng.random() < 0.15:
            # an extra right-hand variable, usually pinned by the guard
            pool.append(w)
            if rng.random() < 0.7:
                plus = th.op("+", (INT, INT))
                guard_parts.append(
                    App(th.op("=", (INT, INT)), [w, App(plus, [rng.choice(lhs_vars), value()])])
                )
        for _ in range(rng.choice([0, 0, 1, 1, 2])):
            guard_parts.append(atom(rng.choice(lhs_vars)))
        rhs = rhs_term(pool, rng.randint(0, 3))
        guard = mk_and(*guard_parts) if guard_parts else TRUE
        used = term_vars(rhs) | term_vars(guard)
        if w in used and w not in term_vars(rhs):
            # keep the extra variable meaningful: it must appear somewhere
            rhs = App(f, [w])
        rules.append(Rule(lhs, rhs, guard))
    problem = Problem("LCTRS", th, funs, [], [], "random")
    return problem.with_rules(rules)


def random_corpus(seed: int, count: int) -> list:
    rng = random.Random(seed)
    return [random_system(rng) for _ in range(count)]
