"""Formula-level decision core: ite lifting, NNF, DPLL over theory atoms,
per-sort conjunction solving, and model verification.

Everything answers sat only with a model that evaluates true, unsat only
through the complete fragments, and unknown otherwise.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

from ..terms import App, BOOL, FunSym, INT, REAL, SymKind, Term, Var, variables
from ..theory import (
    FALSE,
    NotGroundLogical,
    TRUE,
    interpret,
    iter_sort_values,
    mk_eq,
    value_term,
)
from .arith import SAT, UNKNOWN, UNSAT, LinAtom, box_search_models, solve_int, solve_real

_DPLL_LEAVES = 40_000
_BV_ENUM_LIMIT = 1 << 16


class _Budget:
    def __init__(self, leaves=_DPLL_LEAVES):
        self.leaves = leaves
        self.blown = False

    def spend(self) -> bool:
        self.leaves -= 1
        if self.leaves <= 0:
            self.blown = True
            return False
        return True


def _op(name, args):
    sorts = tuple(a.sort if isinstance(a, Var) else a.sym.result for a in args)
    res = BOOL
    return App(FunSym(name, sorts, res, SymKind.THEORY), args)


def _not(t):
    if t == TRUE:
        return FALSE
    if t == FALSE:
        return TRUE
    return _op("not", [t])


def lift_ites(t: Term, defs: list, counter: itertools.count) -> Term:
    """Replace non-boolean ite subterms by fresh variables + definitions."""
    if isinstance(t, Var) or not t.args:
        return t
    args = [lift_ites(a, defs, counter) for a in t.args]
    if t.sym.name == "ite" and t.sym.result != BOOL:
        v = Var(f"!ite{next(counter)}", t.sym.result)
        c, a, b = args
        defs.append(_op("or", [_not(c), mk_eq(v, a)]))
        defs.append(_op("or", [c, mk_eq(v, b)]))
        return v
    return App(t.sym, args)


_REL_NEG = {"<=": ">", "<": ">=", ">=": "<", ">": "<=", "bvult": "bvuge",
            "bvule": "bvugt", "bvugt": "bvule", "bvuge": "bvult",
            "bvslt": "bvsge", "bvsle": "bvsgt", "bvsgt": "bvsle", "bvsge": "bvslt"}


def nnf(t: Term, positive: bool = True) -> Term:
    """Negation normal form; only and/or/atoms/negated-atoms remain."""
    if isinstance(t, Var):
        return t if positive else _not(t)
    name = t.sym.name
    if name == "not":
        return nnf(t.args[0], not positive)
    if name in ("and", "or"):
        flip = {"and": "or", "or": "and"}
        op = name if positive else flip[name]
        return _op(op, [nnf(a, positive) for a in t.args])
    if name == "=>":
        a, b = t.args
        return nnf(_op("or", [_not(a), b]), positive)
    if name == "xor":
        a, b = t.args
        return nnf(_op("or", [_op("and", [a, _not(b)]), _op("and", [_not(a), b])]), positive)
    if name == "ite" and t.sym.result == BOOL:
        c, a, b = t.args
        return nnf(_op("or", [_op("and", [c, a]), _op("and", [_not(c), b])]), positive)
    if name in ("=", "distinct") and len(t.args) > 2:
        pairs = []
        args = t.args
        if name == "=":
            pairs = [mk_eq(args[i], args[i + 1]) for i in range(len(args) - 1)]
        else:
            pairs = [_not(mk_eq(a, b)) for a, b in itertools.combinations(args, 2)]
        return nnf(_op("and", pairs), positive)
    if name in ("=", "distinct") and t.sym.arg_sorts and t.sym.arg_sorts[0] == BOOL:
        a, b = t.args
        eq = _op("or", [_op("and", [a, b]), _op("and", [_not(a), _not(b)])])
        if name == "distinct":
            return nnf(eq, not positive)
        return nnf(eq, positive)
    if name == "distinct":
        return nnf(mk_eq(t.args[0], t.args[1]), not positive)
    if positive:
        return t
    if name in _REL_NEG:
        return _op(_REL_NEG[name], list(t.args))
    return _not(t)  # negated atom literal (e.g. not(= ..), not(p))


def _simplify(t: Term, assign: dict) -> Term:
    """Boolean simplification under a partial atom assignment."""
    key = t
    if key in assign:
        return TRUE if assign[key] else FALSE
    if isinstance(t, Var):
        return t
    name = t.sym.name
    if name == "not":
        inner = _simplify(t.args[0], assign)
        return _not(inner)
    if name in ("and", "or"):
        args = [_simplify(a, assign) for a in t.args]
        out = []
        for a in args:
            if name == "and":
                if a == FALSE:
                    return FALSE
                if a != TRUE:
                    out.append(a)
            else:
                if a == TRUE:
                    return TRUE
                if a != FALSE:
                    out.append(a)
        if not out:
            return TRUE if name == "and" else FALSE
        if len(out) == 1:
            return out[0]
        return _op(name, out)
    return t


def solve(assertions: list, budget: "_Budget | None" = None) -> tuple:
    """Decide the conjunction of *assertions*.  Returns (status, model) with
    model mapping Var -> value term."""
    budget = budget or _Budget()
    counter = itertools.count()
    defs: list = []
    lifted = [lift_ites(a, defs, counter) for a in assertions]
    formulas = [nnf(f) for f in lifted + defs]
    free = set()
    for f in formulas:
        free |= variables(f)
    status, raw_model = _search(formulas, {}, budget)
    if status != SAT:
        if status == UNSAT and budget.blown:
            return UNKNOWN, None
        return status, None
    model = dict(raw_model)
    for v in free:
        model.setdefault(v, _default_value(v.sort))
    # verify by evaluation; only verified models escape
    sub = dict(model)
    for f in assertions:
        try:
            if interpret(_substitute(f, sub)) is not True:
                return UNKNOWN, None
        except NotGroundLogical:
            return UNKNOWN, None
    return SAT, model


def _substitute(t: Term, model: dict) -> Term:
    if isinstance(t, Var):
        return model.get(t, t)
    if not t.args:
        return t
    return App(t.sym, [_substitute(a, model) for a in t.args])


def _default_value(sort):
    if sort == BOOL:
        return FALSE
    if sort == INT:
        return value_term(0, INT)
    if sort == REAL:
        return value_term(Fraction(0), REAL)
    if sort.name == "BitVec":
        return value_term(0, sort)
    return None


def _search(formulas: list, assign: dict, budget: "_Budget") -> tuple:
    """DPLL: split on or-nodes, collect literals, then do a theory check."""
    if not budget.spend():
        return UNSAT, None  # flagged as blown; reported unknown upstream
    literals: list = []
    disjunctions: list = []
    stack = list(formulas)
    while stack:
        f = stack.pop()
        f = _simplify(f, assign)
        if f == TRUE:
            continue
        if f == FALSE:
            return UNSAT, None
        if isinstance(f, App) and f.sym.name == "and":
            stack.extend(f.args)
        elif isinstance(f, App) and f.sym.name == "or":
            disjunctions.append(f)
        else:
            literals.append(f)
    # assert the collected literals as atom assignments
    new_assign = dict(assign)
    for lit in literals:
        positive = True
        atom = lit
        if isinstance(atom, App) and atom.sym.name == "not":
            positive = False
            atom = atom.args[0]
        if atom in new_assign:
            if new_assign[atom] != positive:
                return UNSAT, None
        else:
            new_assign[atom] = positive
    if disjunctions:
        reduced = [_simplify(d, new_assign) for d in disjunctions]
        branch = None
        rest = []
        for d in reduced:
            if d == FALSE:
                return UNSAT, None
            if d == TRUE:
                continue
            if branch is None and isinstance(d, App) and d.sym.name == "or":
                branch = d
            else:
                rest.append(d)
        if branch is not None:
            unknown_seen = False
            for alt in branch.args:
                st, model = _search(rest + [alt], new_assign, budget)
                if st == SAT:
                    return st, model
                if st == UNKNOWN:
                    unknown_seen = True
            return (UNKNOWN, None) if unknown_seen else (UNSAT, None)
        if rest:
            return _search(rest, new_assign, budget)
    return _theory_check(new_assign)


# ------------------------------------------------------------- theory checks


def _theory_check(assign: dict) -> tuple:
    bool_model: dict = {}
    int_atoms: list = []
    real_atoms: list = []
    bv_atoms: list = []
    hard: list = []
    for atom, positive in assign.items():
        if isinstance(atom, Var):
            bool_model[atom] = TRUE if positive else FALSE
            continue
        cls = _classify(atom)
        lit = (atom, positive)
        if cls == "int":
            int_atoms.append(lit)
        elif cls == "real":
            real_atoms.append(lit)
        elif cls == "bv":
            bv_atoms.append(lit)
        else:
            hard.append(lit)
    model = dict(bool_model)
    unknown = False
    st, m = _check_int(int_atoms)
    if st == UNSAT:
        return UNSAT, None
    unknown |= st == UNKNOWN
    if m:
        model.update(m)
    st, m = _check_real(real_atoms)
    if st == UNSAT:
        return UNSAT, None
    unknown |= st == UNKNOWN
    if m:
        model.update(m)
    st, m = _check_bv(bv_atoms)
    if st == UNSAT:
        return UNSAT, None
    unknown |= st == UNKNOWN
    if m:
        model.update(m)
    if hard or unknown:
        # last resort: evaluate everything under the partial model
        full = dict(model)
        ok = True
        for atom, positive in assign.items():
            try:
                val = interpret(_substitute(atom, full))
            except NotGroundLogical:
                ok = False
                break
            if val is not (True if positive else False):
                ok = False
                break
        if ok and not unknown:
            return SAT, model
        return UNKNOWN, None
    return SAT, model


def _classify(atom: App) -> str:
    kinds = set()

    def walk(t):
        if isinstance(t, Var):
            kinds.add(_sort_kind(t.sort))
        else:
            if t.sym.name in ("to_real", "to_int", "ite"):
                kinds.add("hard")
            for a in t.args:
                walk(a)
            if not t.args and not t.sym.is_theory:
                kinds.add("hard")

    arg_sorts = atom.sym.arg_sorts
    if arg_sorts:
        kinds.add(_sort_kind(arg_sorts[0]))
    walk(atom)
    kinds.discard("bool")
    if "hard" in kinds or len(kinds) > 1:
        return "hard"
    return kinds.pop() if kinds else "bool"


def _sort_kind(sort):
    if sort == INT:
        return "int"
    if sort == REAL:
        return "real"
    if sort == BOOL:
        return "bool"
    if sort.name == "BitVec":
        return "bv"
    return "hard"


# linear extraction -----------------------------------------------------------


class _NonLinear(Exception):
    pass


def _linear(t: Term, numeric):
    """Return (coeffs, const) for a numeric term, raising _NonLinear."""
    if isinstance(t, Var):
        return {t: numeric(1)}, numeric(0)
    sym = t.sym
    if sym.is_value:
        return {}, sym.payload
    name = sym.name
    if name == "+":
        c1, k1 = _linear(t.args[0], numeric)
        c2, k2 = _linear(t.args[1], numeric)
        out = dict(c1)
        for v, c in c2.items():
            out[v] = out.get(v, numeric(0)) + c
        return out, k1 + k2
    if name == "-" and len(t.args) == 1:
        c1, k1 = _linear(t.args[0], numeric)
        return {v: -c for v, c in c1.items()}, -k1
    if name == "-":
        c1, k1 = _linear(t.args[0], numeric)
        c2, k2 = _linear(t.args[1], numeric)
        out = dict(c1)
        for v, c in c2.items():
            out[v] = out.get(v, numeric(0)) - c
        return out, k1 - k2
    if name == "*":
        c1, k1 = _linear(t.args[0], numeric)
        c2, k2 = _linear(t.args[1], numeric)
        if not c1:
            return {v: k1 * c for v, c in c2.items()}, k1 * k2
        if not c2:
            return {v: k2 * c for v, c in c1.items()}, k1 * k2
        raise _NonLinear
    if name == "/" and numeric is Fraction:
        c2, k2 = _linear(t.args[1], numeric)
        if c2 or k2 == 0:
            raise _NonLinear
        c1, k1 = _linear(t.args[0], numeric)
        return {v: c / k2 for v, c in c1.items()}, k1 / k2
    if name in ("div", "mod", "abs"):
        try:
            val = interpret(t)
            return {}, val
        except NotGroundLogical:
            raise _NonLinear from None
    raise _NonLinear


_REL_TO_ATOM = {"<=": "<=", "<": "<", ">=": "<=", ">": "<", "=": "=", "!=": "!="}


def _atom_to_linatom(atom: App, positive: bool, numeric):
    name = atom.sym.name
    rel = name
    if name == "=" and not positive:
        rel = "!="
    elif not positive:
        raise _NonLinear  # nnf leaves only positive order atoms
    ca, ka = _linear(atom.args[0], numeric)
    cb, kb = _linear(atom.args[1], numeric)
    if rel in (">=", ">"):
        ca, cb, ka, kb = cb, ca, kb, ka
        rel = "<=" if rel == ">=" else "<"
    coeffs = dict(ca)
    for v, c in cb.items():
        coeffs[v] = coeffs.get(v, numeric(0)) - c
    const = ka - kb
    return LinAtom(coeffs, const, _REL_TO_ATOM[rel])


def _check_int(lits) -> tuple:
    if not lits:
        return SAT, {}
    linear = []
    nonlinear = []
    for atom, positive in lits:
        try:
            linear.append(_atom_to_linatom(atom, positive, int))
        except _NonLinear:
            nonlinear.append((atom, positive))
    if nonlinear:
        return _int_box(lits)
    st, raw = solve_int(linear)
    if st != SAT:
        return st, None
    model = {}
    for v, val in raw.items():
        if isinstance(v, Var):
            model[v] = value_term(val, INT)
    return SAT, model


def _int_box(lits) -> tuple:
    vs = set()
    for atom, _ in lits:
        vs |= variables(atom)
    vs = sorted(vs, key=lambda v: v.name)
    if len(vs) > 5:
        return UNKNOWN, None

    def check(assign):
        sub = {v: value_term(n, INT) for v, n in assign.items()}
        for atom, positive in lits:
            try:
                if interpret(_substitute(atom, sub)) is not (True if positive else False):
                    return False
            except NotGroundLogical:
                return False
        return True

    for radius in (1, 2, 4, 8, 16, 32):
        if (2 * radius + 1) ** len(vs) > 200_000:
            break
        for assign in box_search_models(vs, radius):
            if check(assign):
                return SAT, {v: value_term(n, INT) for v, n in assign.items()}
    return UNKNOWN, None


def _check_real(lits) -> tuple:
    if not lits:
        return SAT, {}
    linear = []
    for atom, positive in lits:
        try:
            linear.append(_atom_to_linatom(atom, positive, Fraction))
        except _NonLinear:
            return UNKNOWN, None
    st, raw = solve_real(linear)
    if st != SAT:
        return st, None
    model = {}
    for v, val in raw.items():
        if isinstance(v, Var):
            model[v] = value_term(Fraction(val), REAL)
    return SAT, model


def _check_bv(lits) -> tuple:
    if not lits:
        return SAT, {}
    vs = set()
    for atom, _ in lits:
        vs |= variables(atom)
    vs = sorted(vs, key=lambda v: v.name)
    total = 1
    for v in vs:
        total *= 1 << v.sort.width
        if total > _BV_ENUM_LIMIT:
            return UNKNOWN, None
    domains = [list(iter_sort_values(v.sort)) for v in vs]
    for combo in itertools.product(*domains):
        sub = dict(zip(vs, combo))
        ok = True
        for atom, positive in lits:
            try:
                if interpret(_substitute(atom, sub)) is not (True if positive else False):
                    ok = False
                    break
            except NotGroundLogical:
                return UNKNOWN, None
        if ok:
            return SAT, dict(zip(vs, combo))
    return UNSAT, None
