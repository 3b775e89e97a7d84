"""Termination proving through dependency pairs.

The prover first tries to orient all rules with a recursive path order
whose precedence is searched through the SMT backend.  Failing that, it
extracts dependency pairs over sharped head symbols, estimates the
dependency graph by unification, and repeatedly removes strictly
decreasing pairs using a small portfolio of base orders: argument
projections compared semantically (integer decrease under the rule
constraint) or syntactically (subterm), linear combinations with
searched coefficients, and the path order used as a reduction pair.
Only YES and MAYBE are ever answered; disproving termination is out of
scope.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from .smt import (
    UNSAT,
    VALID,
    SmtSession,
    SmtUnknown,
    SolverCancelled,
    SolverError,
    logic_for,
)
from .system import Problem, Rule
from .terms import (
    BOOL,
    INT,
    App,
    FreshGen,
    FunSym,
    Sort,
    SymKind,
    Term,
    Var,
    apply_subst,
    is_logical,
    positions,
    sort_of,
    subterm_at,
    unify,
    variables,
)
from .theory import FALSE, TRUE, int_value, mk_and, mk_eq, mk_not, mk_or
from .verdict import MAYBE, YES, Proof, Verdict

_SHARP_SORT = Sort("Sharp")

_INT_GT = FunSym(">", (INT, INT), BOOL, SymKind.THEORY)
_INT_GE = FunSym(">=", (INT, INT), BOOL, SymKind.THEORY)
_INT_ADD = FunSym("+", (INT, INT), INT, SymKind.THEORY)
_INT_MUL = FunSym("*", (INT, INT), INT, SymKind.THEORY)

BASE_METHODS = ("rpo", "vc", "sub", "svc")


def _int(n: int) -> Term:
    return App(int_value(n), [])


def _gt_int(a, b):
    return App(_INT_GT, [a, b])


def _ge_int(a, b):
    return App(_INT_GE, [a, b])


def _any(parts) -> Term:
    out = []
    for p in parts:
        if p == TRUE:
            return TRUE
        if p != FALSE:
            out.append(p)
    if not out:
        return FALSE
    formula = out[0]
    for p in out[1:]:
        formula = mk_or(formula, p)
    return formula


def _all(parts) -> Term:
    kept = []
    for p in parts:
        if p == FALSE:
            return FALSE
        if p != TRUE:
            kept.append(p)
    return mk_and(*kept)


def _both(a, b):
    return _all([a, b])


# ---------------------------------------------------------------------------
# dependency pairs


@dataclass
class DPProblem:
    """A set of dependency pairs together with the system they came from."""

    pairs: list
    system: Problem
    graph_processed: bool = False


@dataclass(frozen=True)
class ProjectionCandidate:
    """How a sharped symbol is projected to a comparable term: a single
    argument position, or one integer coefficient per argument."""

    symbol: FunSym
    index: int = -1
    coeffs: tuple = ()

    def __str__(self):
        if self.coeffs:
            return f"{self.symbol.name} -> [{', '.join(map(str, self.coeffs))}]"
        return f"{self.symbol.name} -> {self.index + 1}"


def _sharp_symbols(problem: Problem) -> dict:
    order = {name: k for k, name in enumerate(problem.funs)}
    taken = set(problem.funs)
    out = {}
    for sym in sorted(problem.defined_symbols(), key=lambda s: order.get(s.name, len(order))):
        name = sym.name + "#"
        while name in taken:
            name += "#"
        taken.add(name)
        out[sym] = FunSym(name, sym.arg_sorts, _SHARP_SORT, SymKind.TERM)
    return out


def compute_dps(problem: Problem) -> DPProblem:
    """One pair per defined-root subterm of a right-hand side.

    Theory arguments of the sharped right-hand side whose variables are
    all value-bound are flattened into fresh variables constrained by
    guard equalities, so later projections stay within the theory."""
    sharp = _sharp_symbols(problem)
    pairs = []
    for rule in problem.rules:
        if rule.is_calc:
            continue
        gen = FreshGen(rule.all_vars())
        bound = rule.lvar()
        for pos in positions(rule.rhs):
            sub = subterm_at(rule.rhs, pos)
            if not (isinstance(sub, App) and sub.sym in sharp):
                continue
            args, extra = [], []
            for arg in sub.args:
                if (
                    isinstance(arg, App)
                    and arg.sym.is_theory
                    and not arg.sym.is_value
                    and is_logical(arg)
                    and variables(arg) <= bound
                ):
                    v = gen.fresh("y", sort_of(arg))
                    extra.append(mk_eq(v, arg))
                    args.append(v)
                else:
                    args.append(arg)
            pairs.append(
                Rule(
                    App(sharp[rule.lhs.sym], list(rule.lhs.args)),
                    App(sharp[sub.sym], args),
                    mk_and(rule.guard, *extra),
                    index=len(pairs),
                )
            )
    return DPProblem(pairs, problem)


def _cap_arg(arg, gen):
    if isinstance(arg, Var):
        return arg
    if arg.sym.kind is SymKind.TERM:
        return gen.fresh("c", sort_of(arg))
    return App(arg.sym, [_cap_arg(a, gen) for a in arg.args])


def dependency_edges(dp: DPProblem, session: SmtSession) -> set:
    """Estimated edges i -> j: the capped rhs of pair i unifies with the
    lhs of pair j and the combined guards are satisfiable."""
    edges = set()
    names = {v.name for p in dp.pairs for v in p.all_vars()}
    for i, a in enumerate(dp.pairs):
        gen = FreshGen(names)
        ra = a.rename(gen)
        capped = App(ra.rhs.sym, [_cap_arg(x, gen) for x in ra.rhs.args])
        for j, b in enumerate(dp.pairs):
            rb = b.rename(gen)
            restricted = frozenset(ra.lvar() | rb.lvar())
            sigma = unify(capped, rb.lhs, value_restricted=restricted)
            if sigma is None:
                continue
            guard = mk_and(apply_subst(ra.guard, sigma), apply_subst(rb.guard, sigma))
            if guard == TRUE or session.check_sat(guard) != UNSAT:
                edges.add((i, j))
    return edges


def _cycle_components(n: int, edges: set) -> list:
    """Strongly connected components that actually contain a cycle,
    ordered by smallest member."""
    adj = [[] for _ in range(n)]
    for i, j in sorted(edges):
        adj[i].append(j)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack = []
    comps = []
    counter = [0]

    def strongconnect(root):
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter[0]
                counter[0] += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for k in range(pi, len(adj[v])):
                w = adj[v][k]
                if index[w] == -1:
                    work[-1] = (v, k + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))

    for v in range(n):
        if index[v] == -1:
            strongconnect(v)
    cyclic = [c for c in comps if len(c) > 1 or (c[0], c[0]) in edges]
    return sorted(cyclic, key=lambda c: c[0])


def dependency_graph(dp: DPProblem, session=None) -> list:
    """Split a pair set into one sub-problem per graph cycle; an empty
    result means the pairs admit no infinite chain at all."""
    own = session is None
    if own:
        session = SmtSession(logic_for(dp.system.theory.name))
    try:
        if not dp.pairs:
            return []
        edges = dependency_edges(dp, session)
        comps = _cycle_components(len(dp.pairs), edges)
        return [
            DPProblem([dp.pairs[i] for i in comp], dp.system, graph_processed=True)
            for comp in comps
        ]
    finally:
        if own:
            session.close()


# ---------------------------------------------------------------------------
# recursive path order


def _has_term_sym(t) -> bool:
    if isinstance(t, Var):
        return False
    if t.sym.kind is SymKind.TERM:
        return True
    return any(_has_term_sym(a) for a in t.args)


class _PathOrder:
    """Precedence bookkeeping: one integer level per term symbol.

    With ``levels=None`` the level of each symbol is an unknown and the
    comparison methods build formulas over those unknowns; with concrete
    levels every formula folds to TRUE or FALSE."""

    def __init__(self, symbols, session, levels=None):
        self.session = session
        self.symbols = list(symbols)
        self.level = {}
        for k, sym in enumerate(self.symbols):
            if levels is None:
                self.level[sym] = Var(f"lev{k}", INT)
            else:
                self.level[sym] = _int(levels[sym])

    def level_vars(self):
        return [v for v in self.level.values() if isinstance(v, Var)]

    def prec_gt(self, f, g):
        if f == g:
            return FALSE
        if not f.is_theory and not g.is_theory:
            a, b = self.level.get(f), self.level.get(g)
            if a is None or b is None:
                return FALSE
            if isinstance(a, App) and isinstance(b, App):
                return TRUE if a.sym.payload > b.sym.payload else FALSE
            return _gt_int(a, b)
        if not f.is_theory:
            return TRUE  # term symbols sit above the whole theory signature
        if g.is_value and not f.is_value:
            return TRUE  # theory operations sit above values
        return FALSE


class _RuleOrder:
    """Path-order comparison of two terms under one rule's constraint.

    Pure theory terms over value-bound variables are compared by
    validity of the constraint-entailed decrease (strictness only on
    integers); everything else recurses structurally."""

    def __init__(self, po: _PathOrder, guard, lvars):
        self.po = po
        self.guard = guard
        self.lvars = lvars
        self._gt_memo = {}
        self._eq_memo = {}

    def _logical(self, t) -> bool:
        if isinstance(t, Var):
            return t in self.lvars
        return t.sym.is_theory and all(self._logical(a) for a in t.args)

    def _entails(self, claim) -> bool:
        query = mk_or(mk_not(self.guard), claim)
        return self.po.session.check_valid(query) == VALID

    def eq(self, s, t) -> bool:
        if s == t:
            return True
        key = (s, t)
        if key in self._eq_memo:
            return self._eq_memo[key]
        out = False
        if self._logical(s) and self._logical(t) and sort_of(s) == sort_of(t):
            out = self._entails(mk_eq(s, t))
        self._eq_memo[key] = out
        return out

    def gt(self, s, t) -> Term:
        key = (s, t)
        if key not in self._gt_memo:
            self._gt_memo[key] = self._compare(s, t)
        return self._gt_memo[key]

    def ge(self, s, t) -> Term:
        if self.eq(s, t):
            return TRUE
        return self.gt(s, t)

    def _compare(self, s, t) -> Term:
        if s == t:
            return FALSE
        s_log, t_log = self._logical(s), self._logical(t)
        if s_log and t_log:
            if sort_of(s) == INT and sort_of(t) == INT:
                claim = mk_and(_gt_int(s, t), _ge_int(s, _int(0)))
                return TRUE if self._entails(claim) else FALSE
            return FALSE  # no strict well-founded comparison outside Int
        if t_log:
            # instances of t stay inside the theory; any term containing
            # a genuine term symbol dominates them
            if isinstance(s, Var):
                return FALSE
            return TRUE if _has_term_sym(s) else FALSE
        if s_log:
            return FALSE
        if isinstance(t, Var):
            return TRUE if t in variables(s) else FALSE
        if isinstance(s, Var):
            return FALSE
        by_subterm = _any([self.ge(a, t) for a in s.args])
        dominated = _all([self.gt(s, b) for b in t.args])
        out = _any([by_subterm, _both(self.po.prec_gt(s.sym, t.sym), dominated)])
        if s.sym == t.sym:
            out = _any([out, _both(self._lex(s.args, t.args), dominated)])
        return out

    def _lex(self, ss, ts) -> Term:
        for a, b in zip(ss, ts):
            if self.eq(a, b):
                continue
            return self.gt(a, b)
        return FALSE


def _search_levels(po: _PathOrder, formula, session):
    """Satisfying precedence levels of minimal height, or None.

    Deepening the height bound keeps the found model canonical: ties not
    forced apart by the formula stay tied and are later broken by
    declaration order."""
    if formula == FALSE:
        return None
    unknowns = po.level_vars()
    if not unknowns:
        return {} if formula == TRUE else None
    for height in range(len(unknowns) + 1):
        bounds = []
        for v in unknowns:
            bounds.append(_ge_int(v, _int(0)))
            bounds.append(_ge_int(_int(height), v))
        try:
            model = session.find_values(mk_and(formula, *bounds), unknowns)
        except SmtUnknown:
            model = None
        if model is not None:
            return {
                sym: model[var].sym.payload
                for sym, var in po.level.items()
                if isinstance(var, Var)
            }
    return None


def _totalize(symbols, levels) -> list:
    order = {sym: k for k, sym in enumerate(symbols)}
    return sorted(symbols, key=lambda s: (-levels[s], order[s]))


def _chain_levels(chain) -> dict:
    return {sym: len(chain) - k for k, sym in enumerate(chain)}


def rpo_prove(target, session=None):
    """A precedence under which the rules (for a Problem) or the rules
    weakly plus the pairs (for a DPProblem) decrease; None if the search
    fails.  The returned list is the full precedence chain, strongest
    symbol first."""
    if isinstance(target, DPProblem):
        own = session is None
        if own:
            session = SmtSession(logic_for(target.system.theory.name))
        try:
            res = _rpo_reduction(target, session)
            return res[0] if res else None
        finally:
            if own:
                session.close()
    own = session is None
    if own:
        session = SmtSession(logic_for(target.theory.name))
    try:
        symbols = target.term_symbols()
        po = _PathOrder(symbols, session)
        goal = TRUE
        for rule in target.rules:
            cmp = _RuleOrder(po, rule.guard, frozenset(rule.lvar()))
            goal = _both(goal, cmp.gt(rule.lhs, rule.rhs))
            if goal == FALSE:
                return None
        levels = _search_levels(po, goal, session)
        if levels is None:
            return None
        chain = _totalize(symbols, levels)
        concrete = _PathOrder(symbols, session, levels=_chain_levels(chain))
        for rule in target.rules:
            cmp = _RuleOrder(concrete, rule.guard, frozenset(rule.lvar()))
            if cmp.gt(rule.lhs, rule.rhs) != TRUE:
                return None
        return chain
    finally:
        if own:
            session.close()


def _rpo_reduction(dp: DPProblem, session):
    """Path order as a reduction pair: rules weakly decreasing, every
    pair at least weakly, at least one strictly.  Returns (chain, strict
    pair indexes) or None."""
    problem = dp.system
    symbols = list(problem.term_symbols())
    for pair in dp.pairs:
        for sym in (pair.lhs.sym, pair.rhs.sym):
            if sym not in symbols:
                symbols.append(sym)
    po = _PathOrder(symbols, session)
    goal = TRUE
    for rule in problem.rules:
        cmp = _RuleOrder(po, rule.guard, frozenset(rule.lvar()))
        goal = _both(goal, cmp.ge(rule.lhs, rule.rhs))
        if goal == FALSE:
            return None
    strict_formulas = []
    for pair in dp.pairs:
        cmp = _RuleOrder(po, pair.guard, frozenset(pair.lvar()))
        goal = _both(goal, cmp.ge(pair.lhs, pair.rhs))
        strict_formulas.append(cmp.gt(pair.lhs, pair.rhs))
    goal = _both(goal, _any(strict_formulas))
    if goal == FALSE:
        return None
    levels = _search_levels(po, goal, session)
    if levels is None:
        return None
    chain = _totalize(symbols, levels)
    concrete = _PathOrder(symbols, session, levels=_chain_levels(chain))
    for rule in problem.rules:
        cmp = _RuleOrder(concrete, rule.guard, frozenset(rule.lvar()))
        if cmp.ge(rule.lhs, rule.rhs) != TRUE:
            return None
    strict = []
    for k, pair in enumerate(dp.pairs):
        cmp = _RuleOrder(concrete, pair.guard, frozenset(pair.lvar()))
        if cmp.gt(pair.lhs, pair.rhs) == TRUE:
            strict.append(k)
        elif cmp.ge(pair.lhs, pair.rhs) != TRUE:
            return None
    if not strict:
        return None
    return chain, strict


# ---------------------------------------------------------------------------
# projection-based criteria


def _logical_within(t, lvars) -> bool:
    if isinstance(t, Var):
        return t in lvars
    return t.sym.is_theory and all(_logical_within(a, lvars) for a in t.args)


def _semantic_decrease(s, t, guard, lvars, session):
    """(strict, weak) comparison of two projected integer arguments."""
    if s == t:
        return False, True
    if not (_logical_within(s, lvars) and _logical_within(t, lvars)):
        return False, False
    premise = mk_not(guard)
    claim = mk_and(_gt_int(s, t), _ge_int(s, _int(0)))
    strict = session.check_valid(mk_or(premise, claim)) == VALID
    weak = strict or session.check_valid(mk_or(premise, _ge_int(s, t))) == VALID
    return strict, weak


def _proper_subterm(t, s) -> bool:
    return any(subterm_at(s, p) == t for p in positions(s) if p != ())


def _pair_symbols(pairs) -> list:
    symbols = []
    for p in pairs:
        for sym in (p.lhs.sym, p.rhs.sym):
            if sym not in symbols:
                symbols.append(sym)
    return symbols


def _solve_projection(dp: DPProblem, session, semantic: bool):
    """Shared engine behind the value and subterm criteria: pick one
    argument per sharped symbol so every pair decreases at least weakly
    and as many as possible strictly."""
    pairs = dp.pairs
    if not pairs:
        return [], dp
    symbols = _pair_symbols(pairs)
    if semantic:
        cand = {
            sym: [i for i, srt in enumerate(sym.arg_sorts) if srt == INT]
            for sym in symbols
        }
    else:
        cand = {sym: list(range(sym.arity)) for sym in symbols}
    if any(not c for c in cand.values()):
        return None
    strict_ok, weak_ok = {}, {}
    for k, p in enumerate(pairs):
        lv = frozenset(p.lvar())
        for i in cand[p.lhs.sym]:
            for j in cand[p.rhs.sym]:
                si, tj = p.lhs.args[i], p.rhs.args[j]
                if semantic:
                    st, wk = _semantic_decrease(si, tj, p.guard, lv, session)
                else:
                    st = _proper_subterm(tj, si)
                    wk = si == tj
                strict_ok[k, i, j] = st
                weak_ok[k, i, j] = st or wk

    sym_index = {sym: k for k, sym in enumerate(symbols)}
    pick = {
        (sym, i): Var(f"pr{sym_index[sym]}a{i}", BOOL)
        for sym in symbols
        for i in cand[sym]
    }
    strict_flag = {k: Var(f"st{k}", BOOL) for k in range(len(pairs))}

    base = []
    for sym in symbols:
        choices = [pick[sym, i] for i in cand[sym]]
        base.append(_any(choices))
        for a in range(len(choices)):
            for b in range(a + 1, len(choices)):
                base.append(mk_not(mk_and(choices[a], choices[b])))
    for k, p in enumerate(pairs):
        weak_combos = [
            mk_and(pick[p.lhs.sym, i], pick[p.rhs.sym, j])
            for i in cand[p.lhs.sym]
            for j in cand[p.rhs.sym]
            if weak_ok[k, i, j]
        ]
        base.append(_any(weak_combos))
        strict_combos = [
            mk_and(pick[p.lhs.sym, i], pick[p.rhs.sym, j])
            for i in cand[p.lhs.sym]
            for j in cand[p.rhs.sym]
            if strict_ok[k, i, j]
        ]
        base.append(mk_or(mk_not(strict_flag[k]), _any(strict_combos)))
    base.append(_any(list(strict_flag.values())))
    formula = _all(base)
    if formula == FALSE:
        return None

    unknowns = list(pick.values()) + list(strict_flag.values())

    def solve(extra):
        try:
            return session.find_values(_all([formula] + extra), unknowns)
        except SmtUnknown:
            return None

    def chosen_of(model):
        out = {}
        for sym in symbols:
            for i in cand[sym]:
                if model[pick[sym, i]].sym.payload:
                    out[sym] = i
                    break
        return out

    def strict_set(chosen):
        return {
            k
            for k, p in enumerate(pairs)
            if strict_ok[k, chosen[p.lhs.sym], chosen[p.rhs.sym]]
        }

    model = solve([])
    if model is None:
        return None
    chosen = chosen_of(model)
    best = strict_set(chosen)
    # prefer removing more pairs: insist on a strict superset until unsat
    for _ in range(len(pairs)):
        if len(best) == len(pairs):
            break
        demand = [strict_flag[k] for k in best]
        demand.append(_any([strict_flag[k] for k in range(len(pairs)) if k not in best]))
        model = solve(demand)
        if model is None:
            break
        chosen = chosen_of(model)
        better = strict_set(chosen)
        if len(better) <= len(best):
            break
        best = better

    if semantic:
        # the models above came from cached tables; re-establish each
        # strict decrease with a fresh validity query before removal
        confirmed = set()
        for k in best:
            p = pairs[k]
            si = p.lhs.args[chosen[p.lhs.sym]]
            tj = p.rhs.args[chosen[p.rhs.sym]]
            st, _ = _semantic_decrease(si, tj, p.guard, frozenset(p.lvar()), session)
            if st:
                confirmed.add(k)
        best = confirmed
    if not best:
        return None
    remaining = DPProblem(
        [p for k, p in enumerate(pairs) if k not in best], dp.system
    )
    projection = [ProjectionCandidate(sym, index=chosen[sym]) for sym in symbols]
    return projection, remaining


def value_criterion(dp: DPProblem, session=None):
    """Project every sharped symbol to one integer argument such that
    each pair's constraint entails a weak decrease and at least one a
    strict, bounded-below decrease; strict pairs are removed."""
    own = session is None
    if own:
        session = SmtSession(logic_for(dp.system.theory.name))
    try:
        return _solve_projection(dp, session, semantic=True)
    finally:
        if own:
            session.close()


def subterm_criterion(dp: DPProblem, session=None):
    """Like the value criterion but purely syntactic: the projected
    right-hand argument must equal or be a proper subterm of the
    projected left-hand argument.  Constraints are ignored."""
    own = session is None
    if own:
        session = SmtSession(logic_for(dp.system.theory.name))
    try:
        return _solve_projection(dp, session, semantic=False)
    finally:
        if own:
            session.close()


def _linear_term(app, coeffs) -> Term:
    total = None
    for c, arg in zip(coeffs[app.sym], app.args):
        if c == 0:
            continue
        part = arg if c == 1 else App(_INT_MUL, [_int(c), arg])
        total = part if total is None else App(_INT_ADD, [total, part])
    return total if total is not None else _int(0)


def _symbolic_linear(app, coeff_vars, subst) -> Term:
    total = None
    for i, arg in enumerate(app.args):
        v = coeff_vars.get((app.sym, i))
        if v is None:
            continue
        part = App(_INT_MUL, [v, apply_subst(arg, subst)])
        total = part if total is None else App(_INT_ADD, [total, part])
    return total if total is not None else _int(0)


def special_value_criterion(dp: DPProblem, session=None, bound=2, rounds=40):
    """Value criterion with linear combinations instead of single
    arguments: integer coefficients in [-bound, bound] are searched by
    counterexample-guided refinement and the final decrease implications
    are verified before any pair is removed."""
    own = session is None
    if own:
        session = SmtSession(logic_for(dp.system.theory.name))
    try:
        return _svc(dp, session, bound, rounds)
    finally:
        if own:
            session.close()


def _svc(dp: DPProblem, session, bound, rounds):
    pairs = dp.pairs
    if not pairs:
        return [], dp
    symbols = _pair_symbols(pairs)
    sym_index = {sym: k for k, sym in enumerate(symbols)}
    coeff_vars = {
        (sym, i): Var(f"co{sym_index[sym]}a{i}", INT)
        for sym in symbols
        for i, srt in enumerate(sym.arg_sorts)
        if srt == INT
    }
    if not coeff_vars:
        return None
    strict_flag = {k: Var(f"sv{k}", BOOL) for k in range(len(pairs))}

    constraints = []
    for v in coeff_vars.values():
        constraints.append(_ge_int(v, _int(-bound)))
        constraints.append(_ge_int(_int(bound), v))
    # an argument that is not a pure value-bound theory term in every
    # occurrence cannot enter the combination
    for k, p in enumerate(pairs):
        lv = frozenset(p.lvar())
        for side in (p.lhs, p.rhs):
            for i, arg in enumerate(side.args):
                key = (side.sym, i)
                if key in coeff_vars and not _logical_within(arg, lv):
                    constraints.append(mk_eq(coeff_vars[key], _int(0)))
    constraints.append(_any(list(strict_flag.values())))

    unknowns = list(coeff_vars.values()) + list(strict_flag.values())
    for _ in range(rounds):
        try:
            model = session.find_values(_all(constraints), unknowns)
        except SmtUnknown:
            return None
        if model is None:
            return None
        coeffs = {
            sym: tuple(
                model[coeff_vars[sym, i]].sym.payload if (sym, i) in coeff_vars else 0
                for i in range(sym.arity)
            )
            for sym in symbols
        }
        wants_strict = {k for k in strict_flag if model[strict_flag[k]].sym.payload}
        ok = True
        verified_strict = set()
        for k, p in enumerate(pairs):
            proj_l = _linear_term(p.lhs, coeffs)
            proj_r = _linear_term(p.rhs, coeffs)
            premise = mk_not(p.guard)
            weak = session.check_valid(mk_or(premise, _ge_int(proj_l, proj_r)))
            if weak != VALID:
                ok = False
                cut = _counterexample_cut(
                    p, _ge_int(proj_l, proj_r), coeff_vars, session, None
                )
                if cut is None:
                    return None
                constraints.append(cut)
            if k in wants_strict:
                claim = mk_and(_gt_int(proj_l, proj_r), _ge_int(proj_l, _int(0)))
                strict = session.check_valid(mk_or(premise, claim))
                if strict == VALID:
                    verified_strict.add(k)
                else:
                    ok = False
                    cut = _counterexample_cut(
                        p, claim, coeff_vars, session, strict_flag[k]
                    )
                    if cut is None:
                        return None
                    constraints.append(cut)
        if ok and verified_strict:
            remaining = DPProblem(
                [p for k, p in enumerate(pairs) if k not in verified_strict],
                dp.system,
            )
            projection = [
                ProjectionCandidate(sym, coeffs=coeffs[sym]) for sym in symbols
            ]
            return projection, remaining
    return None


def _counterexample_cut(pair, claim, coeff_vars, session, flag):
    """Instantiate the failed decrease at a concrete counterexample and
    return it as a constraint over the coefficient unknowns."""
    wanted = sorted(
        variables(pair.guard) | variables(pair.lhs) | variables(pair.rhs),
        key=lambda v: v.name,
    )
    try:
        witness = session.find_values(mk_and(pair.guard, mk_not(claim)), wanted)
    except SmtUnknown:
        return None
    if witness is None:
        return None
    left = _symbolic_linear(pair.lhs, coeff_vars, witness)
    right = _symbolic_linear(pair.rhs, coeff_vars, witness)
    if flag is None:
        return _ge_int(left, right)
    body = mk_and(_gt_int(left, right), _ge_int(left, _int(0)))
    return mk_or(mk_not(flag), body)


# ---------------------------------------------------------------------------
# the reduction-pair loop


def _run_base(name, dp, session, proof):
    """Apply one base order; returns the surviving pairs or None."""
    before = len(dp.pairs)
    if name == "rpo":
        res = _rpo_reduction(dp, session)
        if res is None:
            return None
        chain, strict = res
        if proof:
            proof.note(
                f"path order removes {len(strict)} pair(s); precedence: "
                + " > ".join(s.name for s in chain),
                indent=1,
            )
        return [p for k, p in enumerate(dp.pairs) if k not in strict]
    label = {
        "vc": "value criterion",
        "sub": "subterm criterion",
        "svc": "special value criterion",
    }[name]
    fn = {
        "vc": value_criterion,
        "sub": subterm_criterion,
        "svc": special_value_criterion,
    }[name]
    res = fn(dp, session=session)
    if res is None:
        return None
    projection, remaining = res
    if proof:
        desc = ", ".join(str(c) for c in projection)
        proof.note(
            f"{label}: {desc}; removes {before - len(remaining.pairs)} pair(s)",
            indent=1,
        )
        proof.add_detail("criteria", label)
    return remaining.pairs


def reduction_pairs(dp: DPProblem, base_methods=None, session=None, proof=None):
    """Remove strictly decreasing pairs with the first base order that
    applies, then filter the remainder through the dependency graph.
    None when every base order fails on a cyclic component."""
    own = session is None
    if own:
        session = SmtSession(logic_for(dp.system.theory.name))
    try:
        names = list(base_methods) if base_methods else ["vc", "sub", "svc", "rpo"]
        for n in names:
            if n not in BASE_METHODS:
                raise ValueError(f"unknown base method {n!r}")
        if not dp.graph_processed:
            parts = dependency_graph(dp, session)
            dp = DPProblem(
                [p for part in parts for p in part.pairs], dp.system, True
            )
        if not dp.pairs:
            return dp
        for name in names:
            survivors = _run_base(name, dp, session, proof)
            if survivors is None:
                continue
            remainder = DPProblem(survivors, dp.system)
            parts = dependency_graph(remainder, session) if survivors else []
            return DPProblem(
                [p for part in parts for p in part.pairs], dp.system, True
            )
        return None
    finally:
        if own:
            session.close()


def prove_termination(
    problem: Problem,
    strategy=None,
    session=None,
    solver_command=None,
    timeout=None,
) -> Verdict:
    """YES when the rules terminate by one of the implemented orders,
    MAYBE otherwise (never NO).

    The default strategy first tries to orient the rules directly with
    the path order and then runs the dependency-pair loop with all base
    orders enabled.  An explicit *strategy* is a list of method names
    from BASE_METHODS; including "rpo" also enables the direct stage."""
    start = time.monotonic()
    deadline = start + timeout if timeout else None
    own = session is None
    if own:
        session = SmtSession(logic_for(problem.theory.name), command=solver_command)
    proof = Proof("termination")

    def done(answer, method, reason=""):
        return Verdict(answer, method, proof, time.monotonic() - start, reason=reason)

    try:
        names = list(strategy) if strategy else ["rpo", "vc", "sub", "svc"]
        for n in names:
            if n not in BASE_METHODS:
                raise ValueError(f"unknown termination method {n!r}")
        if "rpo" in names:
            chain = rpo_prove(problem, session=session)
            if chain is not None:
                proof.note("recursive path order orients every rule")
                proof.note("precedence: " + " > ".join(s.name for s in chain))
                proof.details["precedence"] = [s.name for s in chain]
                return done(YES, "rpo")
            proof.note("no strict path order on the rules")
        current = compute_dps(problem)
        if not current.pairs:
            proof.note("no dependency pairs")
            return done(YES, "dp")
        proof.note(f"{len(current.pairs)} dependency pair(s)")
        for p in current.pairs:
            proof.note(str(p), indent=1)
        for _ in range(len(current.pairs) + 2):
            if deadline and time.monotonic() > deadline:
                return done(MAYBE, "dp", reason="timed out")
            current = reduction_pairs(current, names, session=session, proof=proof)
            if current is None:
                proof.note("remaining pairs not handled by any base order")
                return done(MAYBE, "dp", reason="unsolved dependency-pair component")
            if not current.pairs:
                proof.note("dependency graph has no cycles left")
                return done(YES, "dp")
            proof.note(f"{len(current.pairs)} pair(s) remain in cycles")
        return done(MAYBE, "dp", reason="no progress")
    except SolverCancelled:
        return done(MAYBE, "dp", reason="cancelled")
    except SolverError as exc:
        return done(MAYBE, "dp", reason=f"solver failure: {exc}")
    finally:
        if own:
            session.close()
