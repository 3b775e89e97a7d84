"""Many-sorted terms over a split signature.

Function symbols are partitioned into term symbols, theory symbols and
values (value symbols are the shared constants allowed in both parts of
the signature).  Terms are immutable; sorts are checked when an
application is built.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator, Optional, Union


class TermError(Exception):
    pass


class SortMismatch(TermError):
    pass


class PositionOutOfRange(TermError):
    pass


@dataclass(frozen=True)
class Sort:
    name: str
    width: Optional[int] = None  # only bit-vector sorts carry a width

    def __str__(self):
        if self.width is not None:
            return f"(_ BitVec {self.width})"
        return self.name


BOOL = Sort("Bool")
INT = Sort("Int")
REAL = Sort("Real")


def bitvec(width: int) -> Sort:
    return Sort("BitVec", width)


class SymKind(Enum):
    TERM = "term"
    THEORY = "theory"
    VALUE = "value"


@dataclass(frozen=True)
class FunSym:
    """A function symbol; values carry their payload (int, Fraction, bool
    or a (width, bits) pair) so interpretation never re-parses names."""

    name: str
    arg_sorts: tuple
    result: Sort
    kind: SymKind = SymKind.TERM
    payload: object = None

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)

    @property
    def is_value(self) -> bool:
        return self.kind is SymKind.VALUE

    @property
    def is_theory(self) -> bool:
        return self.kind in (SymKind.THEORY, SymKind.VALUE)

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Var:
    name: str
    sort: Sort

    def __str__(self):
        return self.name


class App:
    """Function application.  Equality/hash are structural and cached."""

    __slots__ = ("sym", "args", "_hash", "_size")

    def __init__(self, sym: FunSym, args=()):
        args = tuple(args)
        if len(args) != sym.arity:
            raise SortMismatch(
                f"{sym.name} expects {sym.arity} arguments, got {len(args)}"
            )
        for a, want in zip(args, sym.arg_sorts):
            got = a.sort if isinstance(a, Var) else a.sym.result
            if got != want:
                raise SortMismatch(
                    f"argument of {sym.name} has sort {got}, expected {want}"
                )
        self.sym = sym
        self.args = args
        self._hash = hash((sym, args))
        self._size = 1 + sum(size(a) for a in args)

    @property
    def sort(self) -> Sort:
        return self.sym.result

    def __eq__(self, other):
        return (
            self is other
            or isinstance(other, App)
            and self._hash == other._hash
            and self.sym == other.sym
            and self.args == other.args
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"App({self})"

    def __str__(self):
        if not self.args:
            return self.sym.name
        return "(" + " ".join([self.sym.name] + [str(a) for a in self.args]) + ")"


Term = Union[Var, App]
Position = tuple  # of 1-based indices; () is the root


def sort_of(t: Term) -> Sort:
    return t.sort if isinstance(t, Var) else t.sym.result


def size(t: Term) -> int:
    return 1 if isinstance(t, Var) else t._size


def is_value(t: Term) -> bool:
    return isinstance(t, App) and t.sym.is_value


def is_logical(t: Term) -> bool:
    """True for terms built only from theory symbols, values and variables."""
    if isinstance(t, Var):
        return True
    return t.sym.is_theory and all(is_logical(a) for a in t.args)


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    return all(is_ground(a) for a in t.args)


def variables(t: Term) -> set:
    out = set()
    _collect_vars(t, out)
    return out


def _collect_vars(t, out):
    if isinstance(t, Var):
        out.add(t)
    else:
        for a in t.args:
            _collect_vars(a, out)


def positions(t: Term) -> Iterator[Position]:
    """All positions of *t*, root first, left to right."""
    yield ()
    if isinstance(t, App):
        for i, a in enumerate(t.args, start=1):
            for p in positions(a):
                yield (i,) + p


def fun_positions(t: Term) -> Iterator[Position]:
    """Positions whose subterm is an application."""
    if isinstance(t, App):
        yield ()
        for i, a in enumerate(t.args, start=1):
            for p in fun_positions(a):
                yield (i,) + p


def subterm_at(t: Term, p: Position) -> Term:
    for i in p:
        if isinstance(t, Var) or not 1 <= i <= len(t.args):
            raise PositionOutOfRange(f"no position {p}")
        t = t.args[i - 1]
    return t


def replace_at(t: Term, p: Position, s: Term) -> Term:
    if not p:
        if sort_of(t) != sort_of(s):
            raise SortMismatch(
                f"cannot replace {sort_of(t)} subterm by {sort_of(s)} term"
            )
        return s
    if isinstance(t, Var) or not 1 <= p[0] <= len(t.args):
        raise PositionOutOfRange(f"no position {p}")
    i = p[0] - 1
    args = list(t.args)
    args[i] = replace_at(args[i], p[1:], s)
    return App(t.sym, args)


def parallel_to(p: Position, q: Position) -> bool:
    """Neither position is a prefix of the other."""
    k = min(len(p), len(q))
    return p[:k] != q[:k]


# ---------------------------------------------------------------- substitution

Subst = dict  # Var -> Term


def apply_subst(t: Term, sigma: Subst) -> Term:
    if isinstance(t, Var):
        return sigma.get(t, t)
    if not sigma:
        return t
    return App(t.sym, [apply_subst(a, sigma) for a in t.args])


def compose(sigma: Subst, tau: Subst) -> Subst:
    """Substitution applying sigma first, then tau."""
    out = {x: apply_subst(s, tau) for x, s in sigma.items()}
    for x, s in tau.items():
        out.setdefault(x, s)
    return out


def match(pattern: Term, subject: Term, sigma: Optional[Subst] = None) -> Optional[Subst]:
    """Find sigma with pattern*sigma == subject, extending the given bindings."""
    sigma = dict(sigma) if sigma else {}
    stack = [(pattern, subject)]
    while stack:
        p, s = stack.pop()
        if isinstance(p, Var):
            if p.sort != sort_of(s):
                return None
            bound = sigma.get(p)
            if bound is None:
                sigma[p] = s
            elif bound != s:
                return None
        else:
            if not isinstance(s, App) or p.sym != s.sym:
                return None
            stack.extend(zip(p.args, s.args))
    return sigma


def unify(s: Term, t: Term, value_restricted=frozenset()) -> Optional[Subst]:
    """Most general unifier of s and t, or None.

    Variables in *value_restricted* may only be bound to values or
    variables in the result (the restriction on logical variables used
    when overlaps are computed).
    """
    sigma: Subst = {}
    queue = [(s, t)]
    while queue:
        a, b = queue.pop()
        a = _walk(a, sigma)
        b = _walk(b, sigma)
        if a == b:
            continue
        if isinstance(a, Var):
            if sort_of(b) != a.sort or _occurs(a, b, sigma):
                return None
            sigma[a] = b
        elif isinstance(b, Var):
            if sort_of(a) != b.sort or _occurs(b, a, sigma):
                return None
            sigma[b] = a
        else:
            if a.sym != b.sym:
                return None
            queue.extend(zip(a.args, b.args))
    # resolve chains so the result is idempotent
    out = {x: resolve(v, sigma) for x, v in sigma.items()}
    for x in value_restricted:
        img = out.get(x, x)
        if not (isinstance(img, Var) or is_value(img)):
            return None
    return out


def _walk(t, sigma):
    while isinstance(t, Var) and t in sigma:
        t = sigma[t]
    return t


def _occurs(x, t, sigma):
    t = _walk(t, sigma)
    if t == x:
        return True
    if isinstance(t, App):
        return any(_occurs(x, a, sigma) for a in t.args)
    return False


def resolve(t: Term, sigma: Subst) -> Term:
    """Apply sigma to t repeatedly until no bound variable remains."""
    if isinstance(t, Var):
        s = sigma.get(t)
        return t if s is None else resolve(s, sigma)
    return App(t.sym, [resolve(a, sigma) for a in t.args])


# ---------------------------------------------------------------- fresh names


class FreshGen:
    """Fresh-variable factory: a counter appended to the base name,
    skipping every forbidden name."""

    def __init__(self, forbidden=()):
        self._count = 0
        self._taken = {v.name if isinstance(v, Var) else str(v) for v in forbidden}

    def reserve(self, vars_or_names):
        for v in vars_or_names:
            self._taken.add(v.name if isinstance(v, Var) else str(v))

    def fresh(self, base: str, sort: Sort) -> Var:
        base = base.rstrip("0123456789") or "x"
        while True:
            name = f"{base}{self._count}"
            self._count += 1
            if name not in self._taken:
                self._taken.add(name)
                return Var(name, sort)

    def rename_apart(self, vars) -> Subst:
        return {v: self.fresh(v.name, v.sort) for v in sorted(vars, key=lambda v: v.name)}
