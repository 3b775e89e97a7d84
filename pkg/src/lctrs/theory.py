"""Built-in theories: sorts, values, operation tables, interpretation.

Each problem fixes one theory (Ints, Reals, FixedSizeBitVectors or the
Ints+Reals combination); the boolean core is always present.  Values are
function symbols of arity 0 carrying their payload: int, Fraction, bool
or a (width, bits) pair for bit-vectors.
"""
from __future__ import annotations

import re
from fractions import Fraction

from .terms import (
    BOOL,
    INT,
    REAL,
    App,
    FunSym,
    Sort,
    SymKind,
    Term,
    Var,
    bitvec,
    is_value,
)


class TheoryError(Exception):
    pass


class UnknownTheory(TheoryError):
    pass


class UnknownSymbol(TheoryError):
    pass


class NotGroundLogical(TheoryError):
    pass


# ------------------------------------------------------------------- values


def bool_value(b: bool) -> FunSym:
    return FunSym("true" if b else "false", (), BOOL, SymKind.VALUE, bool(b))


def int_value(n: int) -> FunSym:
    return FunSym(str(n), (), INT, SymKind.VALUE, int(n))


def _decimal_name(q: Fraction) -> str:
    num, den = q.numerator, q.denominator
    d = den
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{num}/{den}"
    # exact decimal expansion: den divides 10^scale
    scale = max(twos, fives)
    digits = abs(num) * 10**scale // den
    s = str(digits).rjust(scale + 1, "0")
    whole, frac = (s[:-scale], s[-scale:]) if scale else (s, "0")
    sign = "-" if num < 0 else ""
    return f"{sign}{whole}.{frac}"


def real_value(q) -> FunSym:
    q = Fraction(q)
    return FunSym(_decimal_name(q), (), REAL, SymKind.VALUE, q)


def bv_value(width: int, bits: int) -> FunSym:
    bits &= (1 << width) - 1
    return FunSym(f"#b{bits:0{width}b}", (), bitvec(width), SymKind.VALUE, (width, bits))


def value_term(payload, sort: Sort) -> App:
    if sort == BOOL:
        return App(bool_value(payload))
    if sort == INT:
        return App(int_value(payload))
    if sort == REAL:
        return App(real_value(payload))
    if sort.name == "BitVec":
        bits = payload[1] if isinstance(payload, tuple) else payload
        return App(bv_value(sort.width, bits))
    raise TheoryError(f"sort {sort} has no values")


TRUE = App(bool_value(True))
FALSE = App(bool_value(False))

_NUMERAL = re.compile(r"^[0-9]+$")
_DECIMAL = re.compile(r"^[0-9]+\.[0-9]+$")
_BIN = re.compile(r"^#b[01]+$")
_HEX = re.compile(r"^#x[0-9a-fA-F]+$")


# ----------------------------------------------------------- operation tables

# Concrete signature table per theory: name -> list of (arg_sorts, result).
# '=', 'distinct' and 'ite' are sort-polymorphic and handled by inference;
# bit-vector operations are width-polymorphic and resolved on demand.

_CORE = {
    "not": [((BOOL,), BOOL)],
    "and": [((BOOL, BOOL), BOOL)],
    "or": [((BOOL, BOOL), BOOL)],
    "xor": [((BOOL, BOOL), BOOL)],
    "=>": [((BOOL, BOOL), BOOL)],
}

_INT_OPS = {
    "+": [((INT, INT), INT)],
    "-": [((INT, INT), INT), ((INT,), INT)],
    "*": [((INT, INT), INT)],
    "div": [((INT, INT), INT)],
    "mod": [((INT, INT), INT)],
    "abs": [((INT,), INT)],
    "<=": [((INT, INT), BOOL)],
    "<": [((INT, INT), BOOL)],
    ">=": [((INT, INT), BOOL)],
    ">": [((INT, INT), BOOL)],
}

_REAL_OPS = {
    "+": [((REAL, REAL), REAL)],
    "-": [((REAL, REAL), REAL), ((REAL,), REAL)],
    "*": [((REAL, REAL), REAL)],
    "/": [((REAL, REAL), REAL)],
    "<=": [((REAL, REAL), BOOL)],
    "<": [((REAL, REAL), BOOL)],
    ">=": [((REAL, REAL), BOOL)],
    ">": [((REAL, REAL), BOOL)],
}

_CONversions = {
    "to_real": [((INT,), REAL)],
    "to_int": [((REAL,), INT)],
}

# bit-vector ops: same-width binary / unary, and comparisons
_BV_ARITH = (
    "bvadd bvsub bvmul bvudiv bvurem bvsdiv bvsrem bvsmod "
    "bvand bvor bvxor bvnand bvnor bvxnor bvshl bvlshr bvashr"
).split()
_BV_UNARY = ["bvnot", "bvneg"]
_BV_CMP = "bvult bvule bvugt bvuge bvslt bvsle bvsgt bvsge".split()


def _merge(*tables):
    out = {}
    for tab in tables:
        for name, sigs in tab.items():
            out.setdefault(name, []).extend(sigs)
    return out


class Theory:
    def __init__(self, name, table, numeral_sorts, has_bv=False):
        self.name = name
        self.table = table
        self.numeral_sorts = numeral_sorts  # sorts whose literals we accept
        self.has_bv = has_bv

    def has_sort(self, sort: Sort) -> bool:
        if sort == BOOL:
            return True
        if sort.name == "BitVec":
            return self.has_bv
        return sort in self.numeral_sorts

    def parse_value(self, atom: str):
        """Value symbol for a literal token, or None."""
        if atom == "true":
            return bool_value(True)
        if atom == "false":
            return bool_value(False)
        if _NUMERAL.match(atom) and INT in self.numeral_sorts:
            return int_value(int(atom))
        if _NUMERAL.match(atom) and REAL in self.numeral_sorts:
            # pure-real theories read numerals as reals, like SMT-LIB does
            return real_value(Fraction(atom))
        if _DECIMAL.match(atom) and REAL in self.numeral_sorts:
            return real_value(Fraction(atom))
        if self.has_bv and _BIN.match(atom):
            return bv_value(len(atom) - 2, int(atom[2:], 2))
        if self.has_bv and _HEX.match(atom):
            return bv_value(4 * (len(atom) - 2), int(atom[2:], 16))
        return None

    def signatures(self, name: str):
        return self.table.get(name, [])

    def op(self, name: str, arg_sorts) -> FunSym:
        """Concrete theory symbol for *name* at the given argument sorts."""
        arg_sorts = tuple(arg_sorts)
        if name in ("=", "distinct") and len(arg_sorts) == 2 and arg_sorts[0] == arg_sorts[1]:
            return FunSym(name, arg_sorts, BOOL, SymKind.THEORY)
        if name == "ite" and len(arg_sorts) == 3 and arg_sorts[0] == BOOL and arg_sorts[1] == arg_sorts[2]:
            return FunSym(name, arg_sorts, arg_sorts[1], SymKind.THEORY)
        if self.has_bv and arg_sorts and arg_sorts[0].name == "BitVec":
            sig = _bv_signature(name, arg_sorts)
            if sig is not None:
                return FunSym(name, arg_sorts, sig, SymKind.THEORY)
        for sig_args, res in self.signatures(name):
            if sig_args == arg_sorts:
                return FunSym(name, arg_sorts, res, SymKind.THEORY)
        raise UnknownSymbol(f"no {name} for argument sorts {tuple(map(str, arg_sorts))}")


def _bv_signature(name, arg_sorts):
    w = arg_sorts[0].width
    if name in _BV_ARITH and len(arg_sorts) == 2 and arg_sorts[1] == arg_sorts[0]:
        return arg_sorts[0]
    if name in _BV_UNARY and len(arg_sorts) == 1:
        return arg_sorts[0]
    if name in _BV_CMP and len(arg_sorts) == 2 and arg_sorts[1] == arg_sorts[0]:
        return BOOL
    if name == "concat" and len(arg_sorts) == 2 and arg_sorts[1].name == "BitVec":
        return bitvec(w + arg_sorts[1].width)
    return None


THEORIES = {
    "Core": Theory("Core", dict(_CORE), frozenset()),
    "Ints": Theory("Ints", _merge(_CORE, _INT_OPS), frozenset({INT})),
    "Reals": Theory("Reals", _merge(_CORE, _REAL_OPS), frozenset({REAL})),
    "Ints_Reals": Theory(
        "Ints_Reals", _merge(_CORE, _INT_OPS, _REAL_OPS, _CONversions), frozenset({INT, REAL})
    ),
    "FixedSizeBitVectors": Theory("FixedSizeBitVectors", dict(_CORE), frozenset(), has_bv=True),
}
THEORIES["IntsReals"] = THEORIES["Ints_Reals"]


def get_theory(name: str) -> Theory:
    try:
        return THEORIES[name]
    except KeyError:
        raise UnknownTheory(f"unsupported theory {name!r}") from None


# ------------------------------------------------------------- interpretation


def _as_signed(width, bits):
    return bits - (1 << width) if bits >> (width - 1) else bits


def _bv_udiv(w, x, y):
    return ((1 << w) - 1) if y == 0 else x // y


def _bv_urem(w, x, y):
    return x if y == 0 else x % y


def _bv_binop(name, w, x, y):
    mask = (1 << w) - 1
    if name == "bvadd":
        return (x + y) & mask
    if name == "bvsub":
        return (x - y) & mask
    if name == "bvmul":
        return (x * y) & mask
    if name == "bvand":
        return x & y
    if name == "bvor":
        return x | y
    if name == "bvxor":
        return x ^ y
    if name == "bvnand":
        return (x & y) ^ mask
    if name == "bvnor":
        return (x | y) ^ mask
    if name == "bvxnor":
        return (x ^ y) ^ mask
    if name == "bvudiv":
        return _bv_udiv(w, x, y)
    if name == "bvurem":
        return _bv_urem(w, x, y)
    if name == "bvshl":
        return (x << y) & mask if y < w else 0
    if name == "bvlshr":
        return x >> y if y < w else 0
    if name == "bvashr":
        sx = _as_signed(w, x)
        return (sx >> y) & mask if y < w else (mask if sx < 0 else 0)
    neg = lambda v: (-v) & mask
    if name == "bvsdiv":
        sx, sy = x >> (w - 1), y >> (w - 1)
        if not sx and not sy:
            return _bv_udiv(w, x, y)
        if sx and not sy:
            return neg(_bv_udiv(w, neg(x), y))
        if not sx and sy:
            return neg(_bv_udiv(w, x, neg(y)))
        return _bv_udiv(w, neg(x), neg(y))
    if name == "bvsrem":
        sx, sy = x >> (w - 1), y >> (w - 1)
        if not sx and not sy:
            return _bv_urem(w, x, y)
        if sx and not sy:
            return neg(_bv_urem(w, neg(x), y))
        if not sx and sy:
            return _bv_urem(w, x, neg(y))
        return neg(_bv_urem(w, neg(x), neg(y)))
    if name == "bvsmod":
        sx, sy = x >> (w - 1), y >> (w - 1)
        ax = neg(x) if sx else x
        ay = neg(y) if sy else y
        u = _bv_urem(w, ax, ay)
        if u == 0:
            return u
        if not sx and not sy:
            return u
        if sx and not sy:
            return (neg(u) + y) & mask
        if not sx and sy:
            return (u + y) & mask
        return neg(u)
    raise UnknownSymbol(name)


def interpret(t: Term):
    """Evaluate a ground logical term to its payload value."""
    if isinstance(t, Var) or not t.sym.is_theory:
        raise NotGroundLogical(f"cannot evaluate {t}")
    sym = t.sym
    if sym.is_value:
        return sym.payload
    name = sym.name
    args = [interpret(a) for a in t.args]
    if name == "not":
        return not args[0]
    if name == "and":
        return all(args)
    if name == "or":
        return any(args)
    if name == "xor":
        return args[0] != args[1]
    if name == "=>":
        return (not args[0]) or args[1]
    if name == "=":
        return args[0] == args[1]
    if name == "distinct":
        return args[0] != args[1]
    if name == "ite":
        return args[1] if args[0] else args[2]
    if sym.arg_sorts and sym.arg_sorts[0].name == "BitVec":
        w = sym.arg_sorts[0].width
        if name in _BV_UNARY:
            mask = (1 << w) - 1
            bits = args[0][1]
            return (w, (bits ^ mask) if name == "bvnot" else (-bits) & mask)
        if name in _BV_CMP:
            x, y = args[0][1], args[1][1]
            if name[2] == "s":
                x, y = _as_signed(w, x), _as_signed(w, y)
            rel = name[3:] if name[2] in "us" else name[2:]
            return {"lt": x < y, "le": x <= y, "gt": x > y, "ge": x >= y}[rel]
        if name == "concat":
            w2 = sym.arg_sorts[1].width
            return (w + w2, (args[0][1] << w2) | args[1][1])
        return (w, _bv_binop(name, w, args[0][1], args[1][1]))
    if name == "+":
        return args[0] + args[1]
    if name == "-":
        return -args[0] if len(args) == 1 else args[0] - args[1]
    if name == "*":
        return args[0] * args[1]
    if name == "abs":
        return abs(args[0])
    if name == "div":  # SMT-LIB euclidean-style: mod is always non-negative
        n, m = args
        if m == 0:
            return 0
        import math

        return math.floor(n / m) if m > 0 else math.ceil(n / m)
    if name == "mod":
        n, m = args
        if m == 0:
            return n
        d = interpret_app("div", [n, m])
        return n - m * d
    if name == "/":
        return Fraction(0) if args[1] == 0 else Fraction(args[0]) / args[1]
    if name == "<=":
        return args[0] <= args[1]
    if name == "<":
        return args[0] < args[1]
    if name == ">=":
        return args[0] >= args[1]
    if name == ">":
        return args[0] > args[1]
    if name == "to_real":
        return Fraction(args[0])
    if name == "to_int":
        import math

        return math.floor(args[0])
    raise UnknownSymbol(name)


def interpret_app(name, args):
    """Helper used for div/mod cross-calls on raw python values."""
    if name == "div":
        n, m = args
        if m == 0:
            return 0
        import math

        return math.floor(n / m) if m > 0 else math.ceil(n / m)
    raise UnknownSymbol(name)


def calc_result(t: App) -> App:
    """The value term a calculation step produces for redex *t*."""
    return value_term(interpret(t), t.sym.result)


# ---------------------------------------------------------- logical builders


def mk_not(t: Term) -> Term:
    if t == TRUE:
        return FALSE
    if t == FALSE:
        return TRUE
    if isinstance(t, App) and t.sym.name == "not":
        return t.args[0]
    return App(FunSym("not", (BOOL,), BOOL, SymKind.THEORY), [t])


def mk_and(*parts) -> Term:
    flat = []
    for p in parts:
        if p == TRUE:
            continue
        if isinstance(p, App) and p.sym.name == "and":
            flat.extend(p.args)
        else:
            flat.append(p)
    if not flat:
        return TRUE
    out = flat[0]
    for p in flat[1:]:
        out = App(FunSym("and", (BOOL, BOOL), BOOL, SymKind.THEORY), [out, p])
    return out


def mk_or(a: Term, b: Term) -> Term:
    return App(FunSym("or", (BOOL, BOOL), BOOL, SymKind.THEORY), [a, b])


def mk_eq(a: Term, b: Term) -> Term:
    sa = a.sort if isinstance(a, Var) else a.sym.result
    return App(FunSym("=", (sa, sa), BOOL, SymKind.THEORY), [a, b])


def conjuncts(t: Term):
    """Flatten nested conjunctions."""
    if isinstance(t, App) and t.sym.name == "and":
        out = []
        for a in t.args:
            out.extend(conjuncts(a))
        return out
    if t == TRUE:
        return []
    return [t]


def iter_sort_values(sort: Sort):
    """All values of a finite sort (Bool or bit-vectors)."""
    if sort == BOOL:
        yield FALSE
        yield TRUE
    elif sort.name == "BitVec":
        for bits in range(1 << sort.width):
            yield App(bv_value(sort.width, bits))
    else:
        raise TheoryError(f"sort {sort} is not finite")
