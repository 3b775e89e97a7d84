"""Reading and writing rewrite systems in the ARI s-expression format.

Supported formats: LCTRS (with :smtlib 2.6), plain TRS and MSTRS.  Plain
systems are given a single sort and true guards so the analysis pipeline
sees one kind of object.
"""
from __future__ import annotations

from dataclasses import replace

from . import sexp
from .system import IllegalRuleRoot, Problem, Rule
from .terms import (
    BOOL,
    App,
    FreshGen,
    FunSym,
    Sort,
    SymKind,
    Term,
    Var,
    bitvec,
    is_value,
    variables,
)
from .theory import (
    TRUE,
    Theory,
    TheoryError,
    UnknownSymbol,
    UnknownTheory,
    get_theory,
    mk_and,
    mk_eq,
    mk_or,
)


class ParseError(Exception):
    pass


class ArityMismatch(ParseError):
    pass


class SortInferenceFailure(ParseError):
    pass


_PLAIN_SORT = Sort("U")


# ------------------------------------------------------------ sort inference


class _Hole:
    """Union-find cell that may get a concrete sort."""

    __slots__ = ("parent", "sort")

    def __init__(self):
        self.parent = self
        self.sort = None

    def find(self):
        h = self
        while h.parent is not h:
            h.parent = h.parent.parent
            h = h.parent
        return h


def _set_sort(h: _Hole, s: Sort):
    h = h.find()
    if h.sort is None:
        h.sort = s
    elif h.sort != s:
        raise SortInferenceFailure(f"sort clash: {h.sort} vs {s}")


def _union(a: _Hole, b: _Hole):
    a, b = a.find(), b.find()
    if a is b:
        return
    if a.sort and b.sort and a.sort != b.sort:
        raise SortInferenceFailure(f"sort clash: {a.sort} vs {b.sort}")
    sort = a.sort or b.sort
    b.parent = a
    a.sort = sort


class _Node:
    __slots__ = ("kind", "data", "children", "hole")

    def __init__(self, kind, data, children=()):
        self.kind = kind  # var | value | fun | op
        self.data = data
        self.children = list(children)
        self.hole = _Hole()


_ARITH = {"+", "-", "*", "/"}
_PREDS = {"<=", "<", ">=", ">"}
_BV_UNIFORM_RESULT = set(
    "bvadd bvsub bvmul bvudiv bvurem bvsdiv bvsrem bvsmod bvand bvor bvxor "
    "bvnand bvnor bvxnor bvshl bvlshr bvashr bvnot bvneg".split()
)
_BV_PRED = set("bvult bvule bvugt bvuge bvslt bvsle bvsgt bvsge".split())


class _TermBuilder:
    """Builds typed terms from raw s-expressions with sort inference."""

    def __init__(self, theory: Theory, funs: dict, var_sorts: dict):
        self.theory = theory
        self.funs = funs
        self.env: dict = {}  # var name -> _Hole
        self.pending: list = []
        for name, sort in var_sorts.items():
            h = _Hole()
            h.sort = sort
            self.env[name] = h

    def build(self, raw) -> _Node:
        if isinstance(raw, str):
            return self._atom(raw)
        if not raw:
            raise ParseError("empty application")
        head = raw[0]
        args = [self.build(a) for a in raw[1:]]
        if isinstance(head, list):
            return self._indexed(head, args)
        # fold a unary minus on a literal into a negative value
        if head == "-" and len(args) == 1 and args[0].kind == "value":
            inner = args[0].data
            neg = self.theory.parse_value(_negate_literal(inner))
            if neg is not None:
                node = _Node("value", neg)
                node.hole.sort = neg.result
                return node
        if head in self.funs:
            fun = self.funs[head]
            if len(args) != fun.arity:
                raise ArityMismatch(
                    f"{head} expects {fun.arity} arguments, got {len(args)}"
                )
            for a, s in zip(args, fun.arg_sorts):
                _set_sort(a.hole, s)
            node = _Node("fun", fun, args)
            node.hole.sort = fun.result
            return node
        node = self._op(head, args)
        if node is not None:
            return node
        raise UnknownSymbol(f"unknown symbol {head!r} applied to arguments")

    def _atom(self, atom: str) -> _Node:
        if atom in self.funs:
            fun = self.funs[atom]
            if fun.arity:
                raise ArityMismatch(f"{atom} expects {fun.arity} arguments")
            node = _Node("fun", fun)
            node.hole.sort = fun.result
            return node
        val = self.theory.parse_value(atom)
        if val is not None:
            node = _Node("value", val)
            node.hole.sort = val.result
            return node
        if atom in self.theory.table or atom in ("=", "distinct", "ite"):
            raise UnknownSymbol(f"operation {atom!r} used without arguments")
        if atom.startswith(("#", ":")):
            raise ParseError(f"unexpected token {atom!r}")
        node = _Node("var", atom)
        hole = self.env.setdefault(atom, _Hole())
        node.hole = hole
        return node

    def _op(self, name: str, args) -> "_Node | None":
        th = self.theory
        node = _Node("op", name, args)
        if name in ("=", "distinct"):
            if len(args) != 2:
                raise ArityMismatch(f"{name} expects 2 arguments")
            _union(args[0].hole, args[1].hole)
            node.hole.sort = BOOL
            self.pending.append(node)
            return node
        if name == "ite":
            if len(args) != 3:
                raise ArityMismatch("ite expects 3 arguments")
            _set_sort(args[0].hole, BOOL)
            _union(args[1].hole, args[2].hole)
            node.hole = args[1].hole
            self.pending.append(node)
            return node
        if name in ("and", "or"):
            if len(args) < 2:
                raise ArityMismatch(f"{name} expects at least 2 arguments")
            for a in args:
                _set_sort(a.hole, BOOL)
            node.hole.sort = BOOL
            return node
        if name == "=>":
            if len(args) < 2:
                raise ArityMismatch("=> expects at least 2 arguments")
            for a in args:
                _set_sort(a.hole, BOOL)
            node.hole.sort = BOOL
            return node
        if name == "not":
            if len(args) != 1:
                raise ArityMismatch("not expects 1 argument")
            _set_sort(args[0].hole, BOOL)
            node.hole.sort = BOOL
            self.pending.append(node)
            return node
        if th.has_bv and (name in _BV_UNIFORM_RESULT or name in _BV_PRED or name == "concat"):
            if name != "concat":
                for a in args[1:]:
                    _union(args[0].hole, a.hole)
                if name in _BV_UNIFORM_RESULT:
                    node.hole = args[0].hole
                else:
                    node.hole.sort = BOOL
            self.pending.append(node)
            return node
        sigs = [s for s in th.signatures(name) if len(s[0]) == len(args)]
        if not sigs:
            return None
        if len(sigs) == 1:
            arg_sorts, res = sigs[0]
            for a, s in zip(args, arg_sorts):
                _set_sort(a.hole, s)
            node.hole.sort = res
            self.pending.append(node)
            return node
        # overloaded numeric operation: argument sorts agree
        for a in args[1:]:
            _union(args[0].hole, a.hole)
        if name in _ARITH:
            node.hole = args[0].hole
        else:
            node.hole.sort = BOOL
        self.pending.append(node)
        return node

    def _indexed(self, head, args) -> _Node:
        if head[0] != "_":
            raise ParseError(f"bad application head {sexp.render(head)}")
        kind = head[1]
        node = _Node("op", tuple(head), args)
        if kind == "extract" and len(head) == 4 and len(args) == 1:
            i, j = int(head[2]), int(head[3])
            node.hole.sort = bitvec(i - j + 1)
            self.pending.append(node)
            return node
        if kind in ("zero_extend", "sign_extend") and len(head) == 3 and len(args) == 1:
            self.pending.append(node)
            return node
        if kind == "bv" and len(head) == 4:
            raise ParseError("(_ bvN w) literals are not supported; use #b form")
        raise ParseError(f"unsupported indexed symbol {sexp.render(list(head))}")

    def resolve(self):
        """Iterate deferred operations until every node has a symbol."""
        for _ in range(len(self.pending) + 2):
            progress = False
            for node in self.pending:
                if node.kind != "op":
                    continue
                if self._try_resolve(node):
                    progress = True
            if not progress:
                break
        bad = [n for n in self.pending if n.kind == "op"]
        if bad:
            what = bad[0].data
            raise SortInferenceFailure(f"cannot infer sorts around {what}")

    def _try_resolve(self, node) -> bool:
        th = self.theory
        name = node.data
        if isinstance(name, tuple):  # indexed bit-vector op
            arg = node.children[0].hole.find().sort
            if arg is None or arg.name != "BitVec":
                return False
            if name[1] == "extract":
                i, j = int(name[2]), int(name[3])
                if not 0 <= j <= i < arg.width:
                    raise SortInferenceFailure("extract indices out of range")
                sym = FunSym(f"(_ extract {i} {j})", (arg,), bitvec(i - j + 1), SymKind.THEORY)
            else:
                k = int(name[2])
                res = bitvec(arg.width + k)
                _set_sort(node.hole, res)
                sym = FunSym(f"(_ {name[1]} {k})", (arg,), res, SymKind.THEORY)
            node.kind = "sym"
            node.data = sym
            return True
        if name == "concat":
            a = node.children[0].hole.find().sort
            b = node.children[1].hole.find().sort
            if a is None or b is None:
                return False
            _set_sort(node.hole, bitvec(a.width + b.width))
            node.kind = "sym"
            node.data = th.op("concat", (a, b))
            return True
        arg = node.children[0].hole.find().sort
        if name == "ite":
            arg = node.children[1].hole.find().sort
            if arg is None:
                return False
            node.kind = "sym"
            node.data = th.op("ite", (BOOL, arg, arg))
            return True
        if arg is None:
            return False
        node.kind = "sym"
        node.data = th.op(name, tuple(arg for _ in node.children))
        return True

    def to_term(self, node: _Node) -> Term:
        if node.kind == "var":
            sort = node.hole.find().sort
            if sort is None:
                raise SortInferenceFailure(f"cannot infer the sort of variable {node.data}")
            return Var(node.data, sort)
        if node.kind == "value":
            return App(node.data)
        if node.kind == "fun" or node.kind == "sym":
            return App(node.data, [self.to_term(c) for c in node.children])
        if node.kind == "op" and node.data in ("and", "or", "=>"):
            kids = [self.to_term(c) for c in node.children]
            op = FunSym(node.data, (BOOL, BOOL), BOOL, SymKind.THEORY)
            if node.data == "=>":
                out = kids[-1]
                for k in reversed(kids[:-1]):
                    out = App(op, [k, out])
                return out
            out = kids[0]
            for k in kids[1:]:
                out = App(op, [out, k])
            return out
        raise SortInferenceFailure(f"unresolved operation {node.data}")


def _negate_literal(val: FunSym) -> str:
    name = val.name
    if name.startswith("-"):
        return name[1:]
    return "-" + name


# ------------------------------------------------------------------ parsing


def _parse_sort(raw, theory: Theory, declared: dict) -> Sort:
    if isinstance(raw, str):
        if raw == "Int":
            s = Sort("Int")
        elif raw == "Real":
            s = Sort("Real")
        elif raw == "Bool":
            s = BOOL
        elif raw in declared:
            return declared[raw]
        else:
            raise ParseError(f"unknown sort {raw!r}")
        if not theory.has_sort(s):
            raise ParseError(f"sort {raw} is not part of theory {theory.name}")
        return s
    if len(raw) == 3 and raw[0] == "_" and raw[1] == "BitVec":
        if not theory.has_bv:
            raise ParseError(f"bit-vector sorts need theory FixedSizeBitVectors")
        return bitvec(int(raw[2]))
    raise ParseError(f"bad sort expression {sexp.render(raw)}")


def _parse_fun_decl(form, fmt, theory, declared) -> FunSym:
    if len(form) != 3:
        raise ParseError(f"bad fun declaration {sexp.render(form)}")
    name = form[1]
    spec = form[2]
    if fmt == "TRS":
        try:
            arity = int(spec)
        except (TypeError, ValueError):
            raise ParseError(f"TRS fun declaration needs an arity: {sexp.render(form)}")
        return FunSym(name, (_PLAIN_SORT,) * arity, _PLAIN_SORT)
    if isinstance(spec, list) and spec and spec[0] == "->":
        sorts = [_parse_sort(s, theory, declared) for s in spec[1:]]
        if len(sorts) < 2:
            raise ParseError(f"bad arrow sort in {sexp.render(form)}")
        return FunSym(name, tuple(sorts[:-1]), sorts[-1])
    return FunSym(name, (), _parse_sort(spec, theory, declared))


def parse(text: str, origin: str = "") -> Problem:
    try:
        forms = sexp.parse_all(text)
    except sexp.SexpError as e:
        raise ParseError(str(e)) from None
    fmt = None
    theory = get_theory("Core")
    funs: dict = {}
    declared_sorts: dict = {}
    rules: list = []
    for form in forms:
        if not isinstance(form, list) or not form:
            raise ParseError(f"unexpected toplevel {sexp.render(form)}")
        head = form[0]
        if head == "format":
            if fmt is not None:
                raise ParseError("duplicate format declaration")
            if len(form) < 2 or form[1] not in ("LCTRS", "TRS", "MSTRS"):
                raise ParseError(f"unsupported format {sexp.render(form)}")
            fmt = form[1]
            if fmt == "TRS":
                declared_sorts["U"] = _PLAIN_SORT
        elif head == "theory":
            if len(form) != 2 or not isinstance(form[1], str):
                raise ParseError(f"bad theory declaration {sexp.render(form)}")
            theory = get_theory(form[1])
        elif head == "sort":
            if len(form) != 2 or not isinstance(form[1], str):
                raise ParseError(f"bad sort declaration {sexp.render(form)}")
            declared_sorts[form[1]] = Sort(form[1])
        elif head == "fun":
            if fmt is None:
                raise ParseError("fun declaration before format")
            fun = _parse_fun_decl(form, fmt, theory, declared_sorts)
            if fun.name in funs:
                raise ParseError(f"duplicate declaration of {fun.name}")
            if theory.parse_value(fun.name) is not None or fun.name in theory.table:
                raise ParseError(f"{fun.name} clashes with a theory symbol")
            funs[fun.name] = fun
        elif head == "rule":
            if fmt is None:
                raise ParseError("rule before format declaration")
            try:
                rules.append(_parse_rule(form, fmt, theory, funs, declared_sorts))
            except TheoryError as e:
                raise ParseError(f"{e} in {sexp.render(form)}") from None
        elif head == "meta-info":
            continue
        else:
            raise ParseError(f"unexpected toplevel form {head!r}")
    if fmt is None:
        raise ParseError("missing format declaration")
    prob = Problem(fmt, theory, funs, [], list(declared_sorts.values()), origin)
    return prob.with_rules(rules)


def _parse_rule(form, fmt, theory, funs, declared_sorts) -> Rule:
    if len(form) < 3:
        raise ParseError(f"bad rule {sexp.render(form)}")
    raw_l, raw_r = form[1], form[2]
    raw_guard = None
    var_sorts: dict = {}
    i = 3
    while i < len(form):
        key = form[i]
        if key == ":guard" and i + 1 < len(form):
            raw_guard = form[i + 1]
        elif key == ":var" and i + 1 < len(form):
            for entry in form[i + 1]:
                if not (isinstance(entry, list) and len(entry) == 2):
                    raise ParseError(f"bad :var entry {sexp.render(entry)}")
                var_sorts[entry[0]] = _parse_sort(entry[1], theory, declared_sorts)
        else:
            raise ParseError(f"unexpected rule attribute {sexp.render(key)}")
        i += 2
    if fmt != "LCTRS" and raw_guard is not None:
        raise ParseError(f"guards are only allowed in LCTRS format")
    builder = _TermBuilder(theory, funs, var_sorts)
    ln = builder.build(raw_l)
    rn = builder.build(raw_r)
    _union(ln.hole, rn.hole)
    gn = builder.build(raw_guard) if raw_guard is not None else None
    if gn is not None:
        _set_sort(gn.hole, BOOL)
    builder.resolve()
    if fmt != "LCTRS":
        # plain formats: default every leftover variable to the single sort
        fallback = _PLAIN_SORT if fmt == "TRS" else None
        for name, hole in builder.env.items():
            if hole.find().sort is None:
                if fallback is None:
                    raise SortInferenceFailure(f"cannot infer the sort of variable {name}")
                hole.find().sort = fallback
    lhs = builder.to_term(ln)
    rhs = builder.to_term(rn)
    guard = builder.to_term(gn) if gn is not None else TRUE
    if not _guard_is_logical(guard):
        raise ParseError(f"guard {guard} contains a non-theory symbol")
    try:
        return Rule(lhs, rhs, guard)
    except IllegalRuleRoot as e:
        raise ParseError(f"{e} in {sexp.render(form)}") from None


def _guard_is_logical(t: Term) -> bool:
    if isinstance(t, Var):
        return True
    return t.sym.is_theory and all(_guard_is_logical(a) for a in t.args)


def parse_file(path) -> Problem:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read(), origin=str(path))


# ----------------------------------------------------------------- printing


def term_to_sexp(t: Term):
    if isinstance(t, Var):
        return t.name
    if is_value(t):
        return value_sexp(t.sym)
    if not t.args:
        return t.sym.name
    return [t.sym.name] + [term_to_sexp(a) for a in t.args]


def value_sexp(sym: FunSym):
    p = sym.payload
    if sym.result == BOOL:
        return "true" if p else "false"
    if sym.result.name == "BitVec":
        return sym.name
    if isinstance(p, int):
        return str(p) if p >= 0 else ["-", str(-p)]
    num, den = p.numerator, p.denominator
    if den == 1 or "/" not in sym.name:
        body = sym.name.lstrip("-")
        return body if num >= 0 else ["-", body]
    body = ["/", str(abs(num)), str(den)]
    return body if num >= 0 else ["-", body]


def sort_to_sexp(s: Sort):
    if s.width is not None:
        return ["_", "BitVec", str(s.width)]
    return s.name


def print_problem(p: Problem) -> str:
    lines = []
    if p.fmt == "LCTRS":
        lines.append("(format LCTRS :smtlib 2.6)")
        if p.theory.name != "Core":
            lines.append(f"(theory {p.theory.name})")
    else:
        lines.append(f"(format {p.fmt})")
    for s in p.sorts:
        if s != _PLAIN_SORT:
            lines.append(f"(sort {s.name})")
    for f in p.funs.values():
        if p.fmt == "TRS":
            lines.append(f"(fun {f.name} {f.arity})")
        elif f.arity == 0:
            lines.append(f"(fun {f.name} {sexp.render(sort_to_sexp(f.result))})")
        else:
            arrow = ["->"] + [sort_to_sexp(s) for s in f.arg_sorts] + [sort_to_sexp(f.result)]
            lines.append(f"(fun {f.name} {sexp.render(arrow)})")
    for r in p.rules:
        parts = ["rule", term_to_sexp(r.lhs), term_to_sexp(r.rhs)]
        if p.fmt == "LCTRS":
            if r.guard != TRUE:
                parts += [":guard", term_to_sexp(r.guard)]
            vs = sorted(r.all_vars(), key=lambda v: v.name)
            if vs:
                parts += [":var", [[v.name, sort_to_sexp(v.sort)] for v in vs]]
        lines.append(sexp.render(parts))
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- preprocessing


def lift_lhs_values(rule: Rule, gen: FreshGen) -> Rule:
    """Move lhs values and repeated logical-variable occurrences into
    fresh variables constrained by guard equalities."""
    logical = rule.lvar()
    seen: set = set()
    eqs: list = []

    def walk(t: Term, root: bool) -> Term:
        if isinstance(t, Var):
            if t in logical and t in seen:
                fresh = gen.fresh(t.name, t.sort)
                eqs.append(mk_eq(fresh, t))
                return fresh
            seen.add(t)
            return t
        if not root and is_value(t):
            fresh = gen.fresh("x", t.sym.result)
            eqs.append(mk_eq(fresh, t))
            return fresh
        if not root and t.sym.is_theory:
            return t  # leave whole theory applications in place
        return App(t.sym, [walk(a, False) for a in t.args])

    lhs = walk(rule.lhs, True)
    if not eqs:
        return rule
    return Rule(lhs, rule.rhs, mk_and(rule.guard, *eqs), rule.index)


def preprocess(problem: Problem, merge: bool = True) -> Problem:
    from .pairs import merge_rules

    gen = FreshGen(problem.all_rule_vars())
    rules = [lift_lhs_values(r, gen) for r in problem.rules]
    if merge:
        rules = merge_rules(rules)
    return problem.with_rules(rules)
