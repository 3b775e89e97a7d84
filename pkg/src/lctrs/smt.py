"""Client session for an SMT-LIB 2 solver subprocess.

Each query is self-contained (``push`` … ``pop``), so a session carries no
assertion state between calls and can be killed and respawned at any point.
The bundled solver is the default backend; any external SMT-LIB solver
reading commands from stdin can be substituted.
"""
from __future__ import annotations

import os
import select
import shlex
import subprocess
import sys
import threading
from fractions import Fraction

from . import sexp
from .ari import sort_to_sexp, term_to_sexp
from .terms import BOOL, Sort, Term, Var, bitvec, variables
from .theory import mk_not, value_term

SAT, UNSAT, UNKNOWN = "sat", "unsat", "unknown"
VALID, INVALID = "valid", "invalid"

_RECYCLE_AFTER = 1000

_LOGICS = {
    "Ints": "QF_NIA",
    "Reals": "QF_NRA",
    "Ints_Reals": "ALL",
    "IntsReals": "ALL",
    "FixedSizeBitVectors": "QF_BV",
    "Core": "ALL",
}


class SolverError(Exception):
    pass


class SolverCrashed(SolverError):
    pass


class SolverCancelled(SolverError):
    pass


class SmtUnknown(Exception):
    """Raised when a witness was requested but the solver cannot decide."""


def logic_for(theory_name: str) -> str:
    return _LOGICS.get(theory_name, "ALL")


def default_command() -> list:
    return [sys.executable, "-m", "lctrs.solver"]


class SmtSession:
    """One solver subprocess plus the bookkeeping to talk to it safely."""

    def __init__(self, logic: str = "ALL", command=None, timeout: float = 5.0):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command) if command else default_command()
        self.logic = logic
        self.timeout = timeout
        self.queries = 0
        self._proc = None
        self._rxbuf = ""
        self._lock = threading.Lock()
        self._cancelled = False

    # ------------------------------------------------------------ lifecycle

    def _spawn(self):
        self._proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=False,
        )
        self._rxbuf = ""
        self._send("(set-option :print-success false)")
        if self.logic:
            self._send(f"(set-logic {self.logic})")

    def _ensure(self):
        if self._cancelled:
            raise SolverCancelled("session was cancelled")
        if self._proc is None or self._proc.poll() is not None:
            self._spawn()
        elif self.queries >= _RECYCLE_AFTER:
            self._kill()
            self._spawn()
            self.queries = 0

    def _kill(self):
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            proc.kill()
            proc.wait(timeout=5)
        except Exception:
            pass

    def close(self):
        with self._lock:
            proc = self._proc
            if proc is not None and proc.poll() is None:
                try:
                    proc.stdin.write(b"(exit)\n")
                    proc.stdin.flush()
                    proc.wait(timeout=1)
                except Exception:
                    pass
            self._kill()

    def cancel(self):
        """Abort the query in flight (callable from another thread)."""
        self._cancelled = True
        proc = self._proc
        if proc is not None:
            try:
                proc.kill()
            except Exception:
                pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # ------------------------------------------------------------------ I/O

    def _send(self, line: str):
        try:
            self._proc.stdin.write(line.encode() + b"\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            if self._cancelled:
                raise SolverCancelled("session was cancelled") from None
            self._kill()
            raise SolverCrashed(f"solver closed its pipe: {exc}") from None

    def _read_reply(self, deadline: float) -> str:
        fd = self._proc.stdout.fileno()
        while True:
            reply, rest = _take_reply(self._rxbuf)
            if reply is not None:
                self._rxbuf = rest
                return reply
            remaining = deadline - _now()
            if remaining <= 0:
                raise TimeoutError
            ready, _, _ = select.select([fd], [], [], min(remaining, 0.05))
            if self._cancelled:
                raise SolverCancelled("session was cancelled")
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                if self._cancelled:
                    raise SolverCancelled("session was cancelled")
                self._kill()
                raise SolverCrashed("solver exited unexpectedly")
            self._rxbuf += chunk.decode(errors="replace")

    def _ask(self, lines: list, replies: int) -> list:
        """Send a bracketed query; returns the reply strings, or None on a
        soft timeout (the process is recycled and the session stays usable)."""
        with self._lock:
            self._ensure()
            self.queries += 1
            deadline = _now() + self.timeout
            try:
                self._send("(push 1)")
                for line in lines:
                    self._send(line)
                out = [self._read_reply(deadline) for _ in range(replies)]
                self._send("(pop 1)")
                return out
            except TimeoutError:
                self._kill()
                return None
            except SolverCrashed:
                raise

    # -------------------------------------------------------------- queries

    def check_sat(self, formula: Term) -> str:
        lines = _declarations(formula)
        lines.append(f"(assert {sexp.render(term_to_sexp(formula))})")
        lines.append("(check-sat)")
        out = self._ask(lines, 1)
        if out is None:
            return UNKNOWN
        answer = out[0].strip()
        if answer in (SAT, UNSAT):
            return answer
        return UNKNOWN

    def check_valid(self, formula: Term) -> str:
        verdict = self.check_sat(mk_not(formula))
        if verdict == UNSAT:
            return VALID
        if verdict == SAT:
            return INVALID
        return UNKNOWN

    def find_values(self, formula: Term, wanted: list) -> "dict | None":
        """A satisfying assignment for *wanted*, or None if unsatisfiable.

        Raises SmtUnknown when the solver cannot tell."""
        wanted = list(wanted)
        lines = _declarations(formula, wanted)
        lines.append(f"(assert {sexp.render(term_to_sexp(formula))})")
        with self._lock:
            self._ensure()
            self.queries += 1
            deadline = _now() + self.timeout
            try:
                self._send("(push 1)")
                for line in lines:
                    self._send(line)
                self._send("(check-sat)")
                answer = self._read_reply(deadline).strip()
                if answer == UNSAT:
                    self._send("(pop 1)")
                    return None
                if answer != SAT:
                    self._send("(pop 1)")
                    raise SmtUnknown(f"solver answered {answer!r}")
                if not wanted:
                    self._send("(pop 1)")
                    return {}
                names = " ".join(v.name for v in wanted)
                self._send(f"(get-value ({names}))")
                reply = self._read_reply(deadline)
                self._send("(pop 1)")
            except TimeoutError:
                self._kill()
                raise SmtUnknown("solver timed out") from None
        try:
            pairs = sexp.parse_one(reply)
            by_name = {}
            for entry in pairs:
                name, raw = entry
                by_name[name if isinstance(name, str) else sexp.render(name)] = raw
            model = {}
            for v in wanted:
                model[v] = parse_value_sexp(by_name[v.name], v.sort)
            return model
        except (sexp.SexpError, KeyError, ValueError, TypeError) as exc:
            raise SmtUnknown(f"unreadable model: {exc}") from None


def _now() -> float:
    import time

    return time.monotonic()


def _declarations(formula: Term, extra=()) -> list:
    decls: dict = {}
    for v in sorted(set(variables(formula)) | set(extra), key=lambda v: v.name):
        if v.name in decls and decls[v.name] != v.sort:
            raise SolverError(f"variable {v.name} used at two sorts")
        decls[v.name] = v.sort
    return [
        f"(declare-const {name} {sexp.render(sort_to_sexp(sort))})"
        for name, sort in decls.items()
    ]


def parse_value_sexp(raw, sort: Sort) -> Term:
    """Turn a solver-printed value back into a value term of *sort*."""
    if isinstance(raw, str):
        if sort == BOOL:
            if raw in ("true", "false"):
                return value_term(raw == "true", sort)
            raise ValueError(f"bad boolean {raw!r}")
        if sort.name == "BitVec":
            if raw.startswith("#b"):
                return value_term(int(raw[2:], 2), sort)
            if raw.startswith("#x"):
                return value_term(int(raw[2:], 16), sort)
            raise ValueError(f"bad bit-vector {raw!r}")
        if sort.name == "Int":
            return value_term(int(raw), sort)
        if sort.name == "Real":
            return value_term(Fraction(raw), sort)
        raise ValueError(f"no values of sort {sort}")
    if isinstance(raw, list) and raw:
        if raw[0] == "-" and len(raw) == 2:
            inner = parse_value_sexp(raw[1], sort)
            return value_term(-inner.sym.payload, sort)
        if raw[0] == "/" and len(raw) == 3 and sort.name == "Real":
            num = Fraction(raw[1]) if isinstance(raw[1], str) else _neg_frac(raw[1])
            den = Fraction(raw[2])
            return value_term(num / den, sort)
        if raw[0] == "_" and len(raw) == 3 and raw[1].startswith("bv"):
            width = int(raw[2])
            return value_term(int(raw[1][2:]), bitvec(width))
    raise ValueError(f"unreadable value {sexp.render(raw) if isinstance(raw, list) else raw!r}")


def _neg_frac(raw) -> Fraction:
    if isinstance(raw, list) and len(raw) == 2 and raw[0] == "-":
        return -Fraction(raw[1])
    raise ValueError("unreadable numerator")


def _take_reply(buf: str):
    """Split one complete solver reply off *buf*: either a bare atom line or a
    balanced parenthesized expression."""
    i = 0
    n = len(buf)
    while i < n and buf[i] in " \t\r\n":
        i += 1
    if i == n:
        return None, buf
    if buf[i] != "(":
        j = buf.find("\n", i)
        if j < 0:
            return None, buf
        return buf[i:j].strip(), buf[j + 1 :]
    depth = 0
    in_str = in_sym = False
    j = i
    while j < n:
        ch = buf[j]
        if in_str:
            if ch == '"':
                in_str = False
        elif in_sym:
            if ch == "|":
                in_sym = False
        elif ch == '"':
            in_str = True
        elif ch == "|":
            in_sym = True
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return buf[i : j + 1], buf[j + 1 :]
        j += 1
    return None, buf
