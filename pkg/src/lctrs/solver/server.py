"""SMT-LIB 2 server speaking on stdin/stdout.

Supports the command subset the rewriting tools use: declarations,
assertions, push/pop, check-sat, get-value and get-model.  Every reply is a
single line.  Unknown is always a legal answer; sat is only reported with a
model that evaluates true, unsat only when the internal procedures are
complete for the asserted fragment.
"""
from __future__ import annotations

import sys

from .. import sexp
from ..ari import _TermBuilder
from ..terms import BOOL, Sort, Term, Var, bitvec, variables
from ..theory import THEORIES, Theory, TheoryError
from .core import SAT, UNKNOWN, UNSAT, _default_value, solve

_BASE = THEORIES["Ints_Reals"]
SERVER_THEORY = Theory("ALL", _BASE.table, _BASE.numeral_sorts, has_bv=True)


class _CommandError(Exception):
    pass


class Server:
    def __init__(self, out=None):
        self.out = out or sys.stdout
        self._reset()

    def _reset(self):
        self.frames = [([], {})]  # (assertions, declarations) per level
        self.model = None
        self.logic = None

    # -- declarations / terms

    def _decls(self) -> dict:
        merged: dict = {}
        for _, decls in self.frames:
            merged.update(decls)
        return merged

    def _parse_sort(self, raw) -> Sort:
        if raw == "Int":
            return Sort("Int")
        if raw == "Real":
            return Sort("Real")
        if raw == "Bool":
            return BOOL
        if isinstance(raw, list) and len(raw) == 3 and raw[:2] == ["_", "BitVec"]:
            return bitvec(int(raw[2]))
        raise _CommandError(f"unsupported sort {sexp.render(raw)}")

    def _build_term(self, raw) -> Term:
        decls = self._decls()
        builder = _TermBuilder(SERVER_THEORY, {}, decls)
        try:
            node = builder.build(raw)
            builder.resolve()
            term = builder.to_term(node)
        except TheoryError as exc:
            raise _CommandError(str(exc)) from None
        except Exception as exc:  # parse/sort errors from the builder
            raise _CommandError(str(exc)) from None
        for v in variables(term):
            if v.name not in decls:
                raise _CommandError(f"undeclared symbol {v.name}")
        return term

    # -- output

    def _emit(self, text: str):
        self.out.write(text + "\n")
        self.out.flush()

    def _error(self, msg: str):
        msg = msg.replace("\\", "\\\\").replace('"', '\\"').replace("\n", " ")
        self._emit(f'(error "{msg}")')

    # -- command dispatch

    def handle(self, form):
        if not isinstance(form, list) or not form or not isinstance(form[0], str):
            self._error("expected a command")
            return True
        cmd = form[0]
        try:
            return self._dispatch(cmd, form)
        except _CommandError as exc:
            self._error(str(exc))
        except TheoryError as exc:
            self._error(str(exc))
        except Exception as exc:
            self._error(f"internal: {exc}")
        return True

    def _dispatch(self, cmd, form):
        if cmd in ("set-logic",):
            self.logic = form[1] if len(form) > 1 else None
        elif cmd in ("set-option", "set-info"):
            pass
        elif cmd == "declare-const":
            if len(form) != 3 or not isinstance(form[1], str):
                raise _CommandError("declare-const expects a name and a sort")
            self.frames[-1][1][form[1]] = self._parse_sort(form[2])
        elif cmd == "declare-fun":
            if len(form) != 4 or not isinstance(form[1], str):
                raise _CommandError("declare-fun expects name, arguments, sort")
            if form[2]:
                raise _CommandError("uninterpreted functions are not supported")
            self.frames[-1][1][form[1]] = self._parse_sort(form[3])
        elif cmd == "assert":
            if len(form) != 2:
                raise _CommandError("assert expects one term")
            term = self._build_term(form[1])
            if (term.sort if isinstance(term, Var) else term.sym.result) != BOOL:
                raise _CommandError("asserted term is not boolean")
            self.frames[-1][0].append(term)
            self.model = None
        elif cmd == "push":
            n = int(form[1]) if len(form) > 1 else 1
            for _ in range(n):
                self.frames.append(([], {}))
        elif cmd == "pop":
            n = int(form[1]) if len(form) > 1 else 1
            if n >= len(self.frames):
                raise _CommandError("pop exceeds the assertion stack")
            del self.frames[len(self.frames) - n:]
            self.model = None
        elif cmd == "check-sat":
            assertions = [a for frame, _ in self.frames for a in frame]
            status, model = solve(assertions)
            self.model = model if status == SAT else None
            self._emit(status)
        elif cmd == "get-value":
            self._get_value(form)
        elif cmd == "get-model":
            self._get_model()
        elif cmd == "echo":
            text = form[1] if len(form) > 1 else ""
            self._emit(f'"{text}"' if not text.startswith('"') else text)
        elif cmd == "reset":
            self._reset()
        elif cmd == "exit":
            return False
        else:
            raise _CommandError(f"unsupported command {cmd}")
        return True

    def _model_value(self, term: Term):
        from ..theory import interpret, value_term

        assigned = {}
        for v in variables(term):
            val = self.model.get(v)
            if val is None:
                val = _default_value(v.sort)
            if val is None:
                raise _CommandError(f"no value for {v.name}")
            assigned[v] = val
        sub = _substitute(term, assigned)
        payload = interpret(sub)
        sort = term.sort if isinstance(term, Var) else term.sym.result
        return value_term(payload, sort)

    def _get_value(self, form):
        if self.model is None:
            raise _CommandError("no model is available")
        if len(form) != 2 or not isinstance(form[1], list):
            raise _CommandError("get-value expects a term list")
        from ..ari import term_to_sexp

        pairs = []
        for raw in form[1]:
            term = self._build_term(raw)
            val = self._model_value(term)
            pairs.append([raw, term_to_sexp(val)])
        self._emit(sexp.render(pairs))

    def _get_model(self):
        if self.model is None:
            raise _CommandError("no model is available")
        from ..ari import sort_to_sexp, term_to_sexp

        decls = self._decls()
        lines = []
        for name in sorted(decls):
            sort = decls[name]
            v = Var(name, sort)
            val = self.model.get(v) or _default_value(sort)
            lines.append(["define-fun", name, [], sort_to_sexp(sort), term_to_sexp(val)])
        self._emit(sexp.render(["model"] + lines))


def _substitute(t: Term, model: dict) -> Term:
    if isinstance(t, Var):
        return model.get(t, t)
    if not t.args:
        return t
    from ..terms import App

    return App(t.sym, [_substitute(a, model) for a in t.args])


def _complete_forms(buffer: str):
    """Split *buffer* into complete top-level forms plus the unfinished rest."""
    forms = []
    depth = 0
    start = 0
    i = 0
    n = len(buffer)
    in_str = in_sym = in_comment = False
    while i < n:
        ch = buffer[i]
        if in_comment:
            if ch == "\n":
                in_comment = False
        elif in_str:
            if ch == '"':
                in_str = False
        elif in_sym:
            if ch == "|":
                in_sym = False
        elif ch == ";":
            in_comment = True
        elif ch == '"':
            in_str = True
        elif ch == "|":
            in_sym = True
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise sexp.SexpError("unbalanced )")
            if depth == 0:
                forms.append(buffer[start : i + 1])
                start = i + 1
        i += 1
    return forms, buffer[start:]


def main(argv=None) -> int:
    server = Server()
    pending = ""
    for line in sys.stdin:
        pending += line
        try:
            complete, pending = _complete_forms(pending)
        except sexp.SexpError as exc:
            server._error(str(exc))
            pending = ""
            continue
        for chunk in complete:
            try:
                forms = sexp.parse_all(chunk)
            except sexp.SexpError as exc:
                server._error(str(exc))
                continue
            for form in forms:
                if not server.handle(form):
                    return 0
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
