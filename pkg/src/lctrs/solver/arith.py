"""Conjunction solvers for linear arithmetic.

Integers: equality elimination (Omega-style modulus reduction), per-
constraint gcd tightening and Fourier-Motzkin projection; a failed
greedy model search falls back to a bounded box search.  The unsat
answers are exact for everything the tightened projection covers; the
documented gap (multi-variable dark-shadow cases) yields "unknown".

Rationals: exact Fourier-Motzkin with strictness tracking, complete for
conjunctions of linear constraints.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import ceil, floor, gcd

SAT, UNSAT, UNKNOWN = "sat", "unsat", "unknown"

_MAX_CONSTRAINTS = 900
_BOX_LIMIT = 200_000


class LinAtom:
    """coeffs . vars + const  REL 0  with REL in {<=, =, !=, <}."""

    __slots__ = ("coeffs", "const", "rel")

    def __init__(self, coeffs: dict, const, rel: str):
        self.coeffs = {v: c for v, c in coeffs.items() if c != 0}
        self.const = const
        self.rel = rel

    def __repr__(self):
        terms = " + ".join(f"{c}*{v}" for v, c in self.coeffs.items())
        return f"{terms} + {self.const} {self.rel} 0"


def _tighten(atom: LinAtom) -> LinAtom:
    """Integer constraints: normalize strict to <=, divide by the gcd."""
    if atom.rel == "<":
        atom = LinAtom(atom.coeffs, atom.const + 1, "<=")
    if not atom.coeffs:
        return atom
    g = 0
    for c in atom.coeffs.values():
        g = gcd(g, abs(c))
    if g > 1:
        if atom.rel == "<=":
            # coeffs/g . x <= -const/g over the integers: round the bound
            # down, i.e. round the moved constant up
            atom = LinAtom(
                {v: c // g for v, c in atom.coeffs.items()},
                ceil(Fraction(atom.const, g)),
                "<=",
            )
        elif atom.rel == "=":
            if atom.const % g:
                return LinAtom({}, 1, "<=")  # 1 <= 0: contradiction marker
            atom = LinAtom({v: c // g for v, c in atom.coeffs.items()}, atom.const // g, "=")
    return atom


def _subst(atom: LinAtom, var, expr_coeffs, expr_const, den=1) -> LinAtom:
    """Replace den*var = expr in *atom* (den divides everything for ints)."""
    c = atom.coeffs.get(var)
    if c is None or c == 0:
        return atom
    coeffs = {v: k * den for v, k in atom.coeffs.items() if v != var}
    const = atom.const * den
    for v, k in expr_coeffs.items():
        coeffs[v] = coeffs.get(v, 0) + c * k
    const += c * expr_const
    return LinAtom(coeffs, const, atom.rel)


def _eval(atom: LinAtom, model: dict):
    val = atom.const
    for v, c in atom.coeffs.items():
        val += c * model[v]
    if atom.rel == "<=":
        return val <= 0
    if atom.rel == "<":
        return val < 0
    if atom.rel == "=":
        return val == 0
    return val != 0


def _symmetric_mod(a: int, m: int) -> int:
    """Residue of a modulo m in (-m/2, m/2]."""
    r = a % m
    if 2 * r > m:
        r -= m
    return r


def solve_int(atoms: list) -> tuple:
    """Decide a conjunction of integer LinAtoms.  Returns (status, model)."""
    eqs, ineqs, neqs = [], [], []
    for a in atoms:
        a = _tighten(a)
        if a.rel == "=":
            eqs.append(a)
        elif a.rel == "!=":
            neqs.append(a)
        else:
            ineqs.append(a)
    if not neqs:
        return _solve_int_core(eqs, ineqs)
    # branch each disequality into < or >
    if len(neqs) > 12:
        return UNKNOWN, None
    status_seen_unknown = False
    for signs in itertools.product((-1, 1), repeat=len(neqs)):
        branch = list(ineqs)
        for s, a in zip(signs, neqs):
            if s < 0:  # expr < 0
                branch.append(_tighten(LinAtom(a.coeffs, a.const, "<")))
            else:  # expr > 0, i.e. -expr < 0
                branch.append(
                    _tighten(LinAtom({v: -c for v, c in a.coeffs.items()}, -a.const, "<"))
                )
        st, model = _solve_int_core(list(eqs), branch)
        if st == SAT:
            return st, model
        if st == UNKNOWN:
            status_seen_unknown = True
    return (UNKNOWN, None) if status_seen_unknown else (UNSAT, None)


def _solve_int_core(eqs, ineqs):
    # --- eliminate equalities exactly
    bindings = []  # (var, coeffs, const, den) with den*var = expr
    sigma_count = 0
    while eqs:
        eq = _tighten(eqs.pop())
        if not eq.coeffs:
            if eq.const != 0:
                return UNSAT, None
            continue
        var, a = min(eq.coeffs.items(), key=lambda kv: (abs(kv[1]), str(kv[0])))
        if abs(a) == 1:
            # var = -sign(a) * (rest + const)
            s = -a
            expr = {v: s * c for v, c in eq.coeffs.items() if v != var}
            const = s * eq.const
            bindings.append((var, expr, const, 1))
            eqs = [_subst(e, var, expr, const) for e in eqs]
            ineqs = [_tighten(_subst(i, var, expr, const)) for i in ineqs]
            continue
        # Omega modulus reduction
        m = abs(a) + 1
        sigma_count += 1
        sig = ("!sigma", sigma_count)
        new_coeffs = {v: _symmetric_mod(c, m) for v, c in eq.coeffs.items()}
        new_coeffs[sig] = -m
        new_const = _symmetric_mod(eq.const, m)
        # the reduced combination defines var in terms of the others and sig
        ak = _symmetric_mod(a, m)  # equals -sign(a)
        assert abs(ak) == 1
        s = -ak
        expr = {v: s * c for v, c in new_coeffs.items() if v != var}
        const = s * new_const
        bindings.append((var, expr, const, 1))
        eqs = [_subst(e, var, expr, const) for e in eqs]
        eqs.append(_tighten(_subst(eq, var, expr, const)))
        ineqs = [_tighten(_subst(i, var, expr, const)) for i in ineqs]
        if sigma_count > 40:
            return UNKNOWN, None
    # --- Fourier-Motzkin with tightening
    constraints = []
    for a in ineqs:
        if not a.coeffs:
            if a.const > 0:
                return UNSAT, None
        else:
            constraints.append(a)
    levels = []  # (var, constraints that mention it at elimination time)
    work = constraints
    while True:
        vars_here = sorted({v for a in work for v in a.coeffs}, key=str)
        if not vars_here:
            break
        var = min(
            vars_here,
            key=lambda v: (
                sum(1 for a in work if a.coeffs.get(v, 0) > 0)
                * sum(1 for a in work if a.coeffs.get(v, 0) < 0),
                str(v),
            ),
        )
        mention = [a for a in work if var in a.coeffs]
        rest = [a for a in work if var not in a.coeffs]
        levels.append((var, mention))
        uppers = [a for a in mention if a.coeffs[var] > 0]  # a*x <= ...
        lowers = [a for a in mention if a.coeffs[var] < 0]
        for up in uppers:
            for lo in lowers:
                au, al = up.coeffs[var], -lo.coeffs[var]
                coeffs: dict = {}
                for v, c in up.coeffs.items():
                    if v != var:
                        coeffs[v] = coeffs.get(v, 0) + al * c
                for v, c in lo.coeffs.items():
                    if v != var:
                        coeffs[v] = coeffs.get(v, 0) + au * c
                const = al * up.const + au * lo.const
                new = _tighten(LinAtom(coeffs, const, "<="))
                if not new.coeffs:
                    if new.const > 0:
                        return UNSAT, None
                else:
                    rest.append(new)
        if len(rest) > _MAX_CONSTRAINTS:
            return UNKNOWN, None
        work = rest
    # --- real-feasible; back-substitute an integer model
    model: dict = {}
    ok = True
    for var, mention in reversed(levels):
        lo, hi = None, None
        for a in mention:
            c = a.coeffs[var]
            for v in a.coeffs:  # vars projected away without a level are free
                if v != var and v not in model:
                    model[v] = 0
            restval = a.const + sum(k * model[v] for v, k in a.coeffs.items() if v != var)
            if c > 0:  # c*var <= -restval
                bound = floor(Fraction(-restval, c))
                hi = bound if hi is None else min(hi, bound)
            else:  # var >= -restval/c  (dividing by c < 0 flips)
                bound = ceil(Fraction(-restval, c))
                lo = bound if lo is None else max(lo, bound)
        if lo is not None and hi is not None and lo > hi:
            ok = False
            break
        pick = 0
        if lo is not None:
            pick = max(pick, lo)
        if hi is not None:
            pick = min(pick, hi)
        model[var] = pick
    if not ok:
        st, model2 = _box_search(constraints, sorted({v for a in constraints for v in a.coeffs}, key=str))
        if st != SAT:
            return UNKNOWN, None
        model = model2
    for var, expr, const, den in reversed(bindings):
        val = const + sum(c * model.get(v, 0) for v, c in expr.items())
        assert val % den == 0
        model[var] = val // den
        for v in expr:
            model.setdefault(v, 0)
    return SAT, model


def _box_search(atoms, variables, evaluate=None):
    if not variables:
        return (SAT, {}) if all(_eval(a, {}) for a in atoms) else (UNSAT, None)
    for radius in (1, 2, 4, 8, 16, 32):
        span = range(-radius, radius + 1)
        if len(span) ** len(variables) > _BOX_LIMIT:
            break
        for combo in itertools.product(span, repeat=len(variables)):
            model = dict(zip(variables, combo))
            if evaluate is not None:
                if evaluate(model):
                    return SAT, model
            elif all(_eval(a, model) for a in atoms):
                return SAT, model
    return UNKNOWN, None


def box_search_models(variables, radius):
    for combo in itertools.product(range(-radius, radius + 1), repeat=len(variables)):
        yield dict(zip(variables, combo))


# ----------------------------------------------------------------- rationals


def solve_real(atoms: list) -> tuple:
    """Decide a conjunction of rational LinAtoms (rel in <=, <, =, !=)."""
    neqs = [a for a in atoms if a.rel == "!="]
    rest = [a for a in atoms if a.rel != "!="]
    if len(neqs) > 12:
        return UNKNOWN, None
    unknown = False
    for signs in itertools.product((-1, 1), repeat=len(neqs)):
        branch = list(rest)
        for s, a in zip(signs, neqs):
            if s < 0:
                branch.append(LinAtom(a.coeffs, a.const, "<"))
            else:
                branch.append(LinAtom({v: -c for v, c in a.coeffs.items()}, -a.const, "<"))
        st, model = _solve_real_core(branch)
        if st == SAT:
            return st, model
        if st == UNKNOWN:
            unknown = True
    return (UNKNOWN, None) if unknown else (UNSAT, None)


def _solve_real_core(atoms):
    work = []
    for a in atoms:
        if a.rel == "=":
            work.append(LinAtom(a.coeffs, a.const, "<="))
            work.append(LinAtom({v: -c for v, c in a.coeffs.items()}, -a.const, "<="))
        else:
            work.append(a)
    constraints = []
    for a in work:
        if not a.coeffs:
            if a.const > 0 or (a.const == 0 and a.rel == "<"):
                return UNSAT, None
        else:
            constraints.append(a)
    levels = []
    cur = constraints
    while True:
        vars_here = sorted({v for a in cur for v in a.coeffs}, key=str)
        if not vars_here:
            break
        var = vars_here[0]
        mention = [a for a in cur if var in a.coeffs]
        rest = [a for a in cur if var not in a.coeffs]
        levels.append((var, mention))
        uppers = [a for a in mention if a.coeffs[var] > 0]
        lowers = [a for a in mention if a.coeffs[var] < 0]
        for up in uppers:
            for lo in lowers:
                au, al = up.coeffs[var], -lo.coeffs[var]
                coeffs: dict = {}
                for v, c in up.coeffs.items():
                    if v != var:
                        coeffs[v] = coeffs.get(v, 0) + al * c
                for v, c in lo.coeffs.items():
                    if v != var:
                        coeffs[v] = coeffs.get(v, 0) + au * c
                const = al * up.const + au * lo.const
                rel = "<" if (up.rel == "<" or lo.rel == "<") else "<="
                new = LinAtom(coeffs, const, rel)
                if not new.coeffs:
                    if new.const > 0 or (new.const == 0 and rel == "<"):
                        return UNSAT, None
                else:
                    rest.append(new)
        if len(rest) > _MAX_CONSTRAINTS:
            return UNKNOWN, None
        cur = rest
    model: dict = {}
    for var, mention in reversed(levels):
        lo = hi = None
        lo_strict = hi_strict = False
        for a in mention:
            c = a.coeffs[var]
            for v in a.coeffs:
                if v != var and v not in model:
                    model[v] = Fraction(0)
            restval = a.const + sum(k * model[v] for v, k in a.coeffs.items() if v != var)
            bound = Fraction(-restval, c)
            if c > 0:
                if hi is None or bound < hi or (bound == hi and a.rel == "<"):
                    hi, hi_strict = bound, a.rel == "<"
            else:
                if lo is None or bound > lo or (bound == lo and a.rel == "<"):
                    lo, lo_strict = bound, a.rel == "<"
        if lo is None and hi is None:
            model[var] = Fraction(0)
        elif lo is None:
            model[var] = hi - 1 if hi_strict else min(Fraction(0), hi)
        elif hi is None:
            model[var] = lo + 1 if lo_strict else max(Fraction(0), lo)
        else:
            if lo > hi or (lo == hi and (lo_strict or hi_strict)):
                return UNKNOWN, None  # should not happen: projection was exact
            model[var] = (lo + hi) / 2
    return SAT, model
