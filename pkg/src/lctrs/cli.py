"""Command-line front end: problem loading, analysis selection, resource
budgets, verdict and proof output.

The first line printed is always YES, NO or MAYBE; everything else goes
after it (``--proof``) or to stderr (``--debug``).
"""
from __future__ import annotations

import argparse
import shlex
import sys
import threading

from . import sexp
from .ari import ParseError, parse, parse_file, preprocess, print_problem, term_to_sexp
from .confluence import METHODS, prove_confluence
from .pairs import compute_ccps, compute_cpcps
from .smt import SmtSession, logic_for
from .termination import (
    BASE_METHODS,
    compute_dps,
    dependency_edges,
    prove_termination,
)


class StrategyParseError(ValueError):
    """A strategy string that does not follow the grammar."""


def parse_strategy(text: str, valid=None) -> list:
    """Parse ``"wo; adc(steps=4); pcp"`` into [(name, params), ...].

    Entries are separated by semicolons; each is a method name optionally
    followed by a parenthesised, comma-separated list of key=integer
    arguments.  Unknown names are rejected with the list of valid ones."""
    names = sorted(set(valid) if valid is not None else set(METHODS))
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, params = chunk, {}
        if "(" in chunk:
            head, _, arglist = chunk.partition("(")
            if not chunk.endswith(")"):
                raise StrategyParseError(f"malformed strategy entry {chunk!r}")
            name = head.strip()
            for piece in arglist[:-1].split(","):
                piece = piece.strip()
                if not piece:
                    continue
                key, eq, val = piece.partition("=")
                key = key.strip()
                if not eq or not key:
                    raise StrategyParseError(
                        f"malformed argument {piece!r} in {chunk!r}"
                    )
                try:
                    params[key] = int(val.strip())
                except ValueError:
                    raise StrategyParseError(
                        f"argument {piece!r} in {chunk!r} is not an integer"
                    ) from None
        if name not in names:
            raise StrategyParseError(
                f"unknown method {name!r}; valid names: {', '.join(names)}"
            )
        out.append((name, params))
    if not out:
        raise StrategyParseError(
            f"empty strategy; valid names: {', '.join(names)}"
        )
    return out


def _t(term) -> str:
    return sexp.render(term_to_sexp(term))


def _dump_ccps(problem, session, out):
    for cp in compute_ccps(problem, session):
        flag = "true" if cp.overlay else "false"
        out.write(
            f"(ccp {_t(cp.left)} {_t(cp.right)}"
            f" :guard {_t(cp.constraint)} :overlay {flag})\n"
        )


def _dump_cpcps(problem, session, out):
    for pcp in compute_cpcps(problem, session):
        ps = " ".join("(" + " ".join(map(str, p)) + ")" for p in pcp.positions)
        out.write(
            f"(cpcp {_t(pcp.left)} {_t(pcp.right)}"
            f" :guard {_t(pcp.constraint)} :positions ({ps}))\n"
        )


def _dump_dp_graph(problem, session, out):
    dp = compute_dps(problem)
    for i, pair in enumerate(dp.pairs):
        out.write(
            f"(node {i} {_t(pair.lhs)} {_t(pair.rhs)} :guard {_t(pair.guard)})\n"
        )
    for i, j in sorted(dependency_edges(dp, session)):
        out.write(f"(edge {i} {j})\n")


def _error(msg: str) -> int:
    print(f"lctrs: {msg}", file=sys.stderr)
    return 2


def run(args) -> int:
    if args.timeout <= 0:
        return _error("--timeout must be positive")
    if args.threads < 1:
        return _error("--threads must be at least 1")
    try:
        if args.file == "-":
            problem = parse(sys.stdin.read(), "<stdin>")
        else:
            problem = parse_file(args.file)
    except (OSError, ParseError) as exc:
        return _error(str(exc))

    problem = preprocess(problem, merge=not args.no_merge)
    if args.debug:
        print(
            f"[debug] {len(problem.rules)} rule(s) after preprocessing",
            file=sys.stderr,
        )

    solver = shlex.split(args.solver) if args.solver else None

    if args.to_ari:
        print(print_problem(problem))
        return 0
    if args.print_ccps or args.print_cpcps or args.print_dp_graph:
        session = SmtSession(logic_for(problem.theory.name), command=solver)
        try:
            if args.print_ccps:
                _dump_ccps(problem, session, sys.stdout)
            if args.print_cpcps:
                _dump_cpcps(problem, session, sys.stdout)
            if args.print_dp_graph:
                _dump_dp_graph(problem, session, sys.stdout)
        finally:
            session.close()
        return 0

    if args.mode == "confluence":
        methods = None
        if args.strategy:
            try:
                methods = parse_strategy(args.strategy)
            except StrategyParseError as exc:
                return _error(str(exc))
        verdict = prove_confluence(
            problem,
            methods=methods,
            timeout=args.timeout,
            threads=args.threads,
            solver_command=solver,
        )
    else:
        names = None
        if args.strategy:
            try:
                entries = parse_strategy(args.strategy, valid=BASE_METHODS)
            except StrategyParseError as exc:
                return _error(str(exc))
            for name, params in entries:
                if params:
                    return _error(f"termination method {name!r} takes no arguments")
            names = [name for name, _ in entries]
        # hard timeout: a watchdog cancels the solver session, which makes
        # any in-flight query raise and the prover answer MAYBE
        session = SmtSession(logic_for(problem.theory.name), command=solver)
        watchdog = threading.Timer(args.timeout, session.cancel)
        watchdog.daemon = True
        watchdog.start()
        try:
            verdict = prove_termination(
                problem, strategy=names, session=session, timeout=args.timeout
            )
        finally:
            watchdog.cancel()
            session.close()

    print(verdict.answer)
    if args.proof:
        trace = verdict.proof.render()
        if trace:
            print(trace)
    if args.debug:
        how = verdict.method or "no method"
        extra = f" ({verdict.reason})" if verdict.reason else ""
        print(
            f"[debug] {how} answered {verdict.answer}{extra}"
            f" in {verdict.elapsed:.2f}s",
            file=sys.stderr,
        )
    return 0


def _add_common(p: argparse.ArgumentParser):
    p.add_argument(
        "file", nargs="?", default="-",
        help="ARI problem file, or '-' for standard input (the default)",
    )
    p.add_argument("--timeout", type=float, default=60.0, metavar="S",
                   help="overall budget in seconds (default 60)")
    p.add_argument("--threads", type=int, default=8, metavar="N",
                   help="concurrent method cap (default 8)")
    p.add_argument("--strategy", metavar="SPEC",
                   help="semicolon-separated methods, e.g. 'wo; adc(steps=4)'")
    p.add_argument("--proof", action="store_true",
                   help="print the proof trace after the verdict")
    p.add_argument("--debug", action="store_true",
                   help="progress and timing information on stderr")
    p.add_argument("--print-ccps", action="store_true",
                   help="print the constrained critical pairs and exit")
    p.add_argument("--print-cpcps", action="store_true",
                   help="print the parallel critical pairs and exit")
    p.add_argument("--print-dp-graph", action="store_true",
                   help="print the dependency graph estimation and exit")
    p.add_argument("--to-ari", action="store_true",
                   help="print the preprocessed problem in ARI format and exit")
    p.add_argument("--solver", metavar="CMD",
                   help="SMT solver command line override")
    p.add_argument("--no-merge", action="store_true",
                   help="disable merging of rules that differ only in guards")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="lctrs",
        description="Confluence and termination analysis of logically "
        "constrained term rewrite systems.",
    )
    sub = ap.add_subparsers(dest="mode", required=True)
    _add_common(sub.add_parser("confluence", help="prove or refute confluence"))
    _add_common(sub.add_parser("termination", help="prove termination"))
    args = ap.parse_args(argv)
    try:
        return run(args)
    except KeyboardInterrupt:
        # tasks and solver sessions are torn down by the provers' own
        # cleanup on the way out; keep line 1 machine-readable
        print("MAYBE")
        return 0


if __name__ == "__main__":
    sys.exit(main())
