"""Confluence and non-confluence criteria, plus the concurrent portfolio.

Every criterion tries to close the constrained critical pairs of the
(preprocessed) system with a specific shape of rewrite sequence; the
non-confluence check instead hunts for a pair that reaches a non-trivial
equation in constrained normal form.  When a pair resists closing, its
constraint is case-split on instantiated rule guards and both halves are
retried, up to a bounded depth.
"""

import queue as queue_mod
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import ari, sexp
from .pairs import (OverlapExplosion, compute_ccps, compute_cpcps,
                    split_candidates, term_vars_through)
from .rewrite import (ConstrainedTerm, all_steps, is_constrained_normal_form,
                      is_trivial, multisteps, parallel_steps_pos)
from .rewrite import NO as T_NO
from .rewrite import YES as T_YES
from .smt import (SmtSession, SolverCancelled, SolverCrashed, SolverError,
                  logic_for)
from .system import Problem
from .terms import FreshGen, Term, variables
from .theory import mk_and, mk_not
from .verdict import MAYBE, NO, YES, Proof, Verdict

_SPLIT_DEPTH = 3
_SCAN_NODES = 60
_NC_NODES = 48


def _fmt(t: Term) -> str:
    return sexp.render(ari.term_to_sexp(t))


@dataclass(frozen=True)
class Equation:
    """Two sides under one shared constraint; stepping a side may extend
    the constraint, which then restricts the other side as well."""

    left: Term
    right: Term
    constraint: Term

    def __str__(self):
        return f"{_fmt(self.left)} ~ {_fmt(self.right)} [{_fmt(self.constraint)}]"


def _gen_for(problem: Problem, eq: Equation) -> FreshGen:
    names = {v.name for v in problem.all_rule_vars()}
    for t in (eq.left, eq.right, eq.constraint):
        names |= {v.name for v in variables(t)}
    return FreshGen(names)


def _trivial(eq: Equation, session) -> str:
    return is_trivial(eq.left, eq.right, eq.constraint, session)


def _key(eq: Equation):
    return (eq.left, eq.right, eq.constraint)


def _step_side(problem, eq: Equation, side: int, session, gen):
    term = eq.left if side == 1 else eq.right
    ct = ConstrainedTerm(term, eq.constraint)
    for st in all_steps(problem, ct, session, gen):
        if side == 1:
            yield Equation(st.result.term, eq.right, st.result.constraint)
        else:
            yield Equation(eq.left, st.result.term, st.result.constraint)


def _cnf_equation(problem, eq: Equation, session) -> bool:
    """Both sides in constrained normal form."""
    for term in (eq.left, eq.right):
        ct = ConstrainedTerm(term, eq.constraint)
        if is_constrained_normal_form(problem, ct, session) != T_YES:
            return False
    return True


def _scan(problem, eq: Equation, session, gen, steps: int,
          max_nodes: int = _SCAN_NODES):
    """Breadth-first closure of an equation under single steps on either
    side.  Returns (first trivial equation or None, first non-trivial
    equation in constrained normal form or None)."""
    seen = set()
    queue = deque([(eq, 0)])
    joined = None
    witness = None
    nodes = 0
    while queue and nodes < max_nodes:
        cur, d = queue.popleft()
        k = _key(cur)
        if k in seen:
            continue
        seen.add(k)
        nodes += 1
        verdict = _trivial(cur, session)
        if verdict == T_YES:
            if joined is None:
                joined = cur
            if witness is not None:
                break
            continue
        succs = []
        for side in (1, 2):
            succs.extend(_step_side(problem, cur, side, session, gen))
        if succs:
            if d < steps:
                for nxt in succs:
                    queue.append((nxt, d + 1))
        elif (witness is None and verdict == T_NO
              and _cnf_equation(problem, cur, session)):
            witness = cur
            if joined is not None:
                break
    return joined, witness


# ------------------------------------------------------------ closing shapes


def _close_join(problem, eq, session, gen, params):
    """Knuth–Bendix style: rewrite both sides to a trivial equation; a
    non-trivial normal form is reported as non-confluence evidence."""
    steps = params.get("steps", 4)
    joined, witness = _scan(problem, eq, session, gen, steps)
    if joined is not None:
        return "closed", joined
    if witness is not None:
        return "no", witness
    return None


def _one_sided_then(problem, eq, session, gen, steps, side=2):
    """All bounded single-step sequences on one side (side 2 by default)."""
    seen = set()
    queue = deque([(eq, 0)])
    while queue:
        cur, d = queue.popleft()
        k = _key(cur)
        if k in seen:
            continue
        seen.add(k)
        yield cur
        if d < steps:
            for nxt in _step_side(problem, cur, side, session, gen):
                queue.append((nxt, d + 1))


def _close_strong(problem, eq, session, gen, params):
    """Both closing shapes of strong closedness: arbitrary steps on one
    side followed by at most one step on the other."""
    steps = params.get("steps", 4)

    def one_direction(many: int) -> Equation | None:
        few = 2 if many == 1 else 1
        seen = set()
        queue = deque([(eq, 0)])
        while queue:
            cur, d = queue.popleft()
            k = _key(cur)
            if k in seen:
                continue
            seen.add(k)
            if _trivial(cur, session) == T_YES:
                return cur
            for other in _step_side(problem, cur, few, session, gen):
                if _trivial(other, session) == T_YES:
                    return other
            if d < steps:
                for nxt in _step_side(problem, cur, many, session, gen):
                    queue.append((nxt, d + 1))
        return None

    first = one_direction(1)
    if first is None:
        return None
    second = one_direction(2)
    if second is None:
        return None
    return "closed", first


def _close_parallel(problem, eq, session, gen, params, side2_steps: int):
    """One parallel step on side 1, then (optionally) steps on side 2."""
    ct = ConstrainedTerm(eq.left, eq.constraint)
    for result, _pos in parallel_steps_pos(problem, ct, session, gen):
        mid = Equation(result.term, eq.right, result.constraint)
        if side2_steps == 0:
            if _trivial(mid, session) == T_YES:
                return "closed", mid
            continue
        for closed in _one_sided_then(problem, mid, session, gen,
                                      side2_steps):
            if _trivial(closed, session) == T_YES:
                return "closed", closed
    return None


def _close_development(problem, eq, session, gen, params, side2_steps: int):
    """One multistep on side 1, then (optionally) steps on side 2."""
    descents = params.get("descents", 2)
    ct = ConstrainedTerm(eq.left, eq.constraint)
    for result in multisteps(problem, ct, session, gen, descents=descents):
        mid = Equation(result.term, eq.right, result.constraint)
        if side2_steps == 0:
            if _trivial(mid, session) == T_YES:
                return "closed", mid
            continue
        for closed in _one_sided_then(problem, mid, session, gen,
                                      side2_steps):
            if _trivial(closed, session) == T_YES:
                return "closed", closed
    return None


# --------------------------------------------------------- split and retry


def _close_with_splits(problem, eq, closer, session, gen_factory, depth,
                       notes):
    """Close an equation, case-splitting its constraint when the direct
    attempt fails.  Both halves of a split must close; any half may
    instead produce non-confluence evidence, which wins immediately."""
    res = closer(eq, gen_factory(eq))
    if res is not None:
        status, payload = res
        if status == "closed":
            notes.append(("closed", payload))
            return "closed"
        notes.append(("witness", payload))
        return "no"
    if depth >= _SPLIT_DEPTH:
        return None
    cands = split_candidates((eq.left, eq.right), eq.constraint, problem,
                             session)
    for cand in cands:
        sub = [("split", cand)]
        halves = (
            Equation(eq.left, eq.right, mk_and(eq.constraint, cand)),
            Equation(eq.left, eq.right, mk_and(eq.constraint, mk_not(cand))),
        )
        outcome = "closed"
        for half in halves:
            r = _close_with_splits(problem, half, closer, session,
                                   gen_factory, depth + 1, sub)
            if r == "no":
                outcome = "no"
                break
            if r != "closed":
                outcome = None
                break
        if outcome is not None:
            notes.extend(sub)
            return outcome
    return None


def _record_notes(proof: Proof, notes, indent=1):
    for kind, payload in notes:
        if kind == "split":
            proof.note(f"split on {_fmt(payload)}", indent)
            proof.add_detail("splits", payload)
        elif kind == "closed":
            proof.note(f"closed: {payload}", indent)
            proof.add_detail("closures", (payload.left, payload.right))
        elif kind == "witness":
            proof.note(f"normal form: {payload}", indent)
            proof.details["witness"] = payload


def _close_all_pairs(problem, pairs, closer, session, proof, params):
    """Drive the split-and-retry loop over every critical pair.  Returns
    YES when all pairs close, NO when one yields non-confluence evidence,
    MAYBE otherwise."""
    for pair in pairs:
        eq = Equation(pair.left, pair.right, pair.constraint)
        proof.note(f"critical pair: {eq}")
        notes: list = []
        r = _close_with_splits(problem, eq, closer, session,
                               lambda e: _gen_for(problem, e), 0, notes)
        _record_notes(proof, notes)
        if r == "no":
            proof.note("non-trivial constrained normal form reached")
            return NO
        if r != "closed":
            proof.note("  not closed")
            return MAYBE
    return YES


# ----------------------------------------------------------------- criteria


def _method_wo(problem, session, proof, params):
    if not problem.is_left_linear():
        proof.note("not left-linear")
        return MAYBE
    pairs = compute_ccps(problem, session)
    if not pairs:
        proof.note("no critical pairs: orthogonal")
        return YES
    if params.get("strict"):
        proof.note(f"{len(pairs)} critical pairs exist")
        return MAYBE
    for pair in pairs:
        eq = Equation(pair.left, pair.right, pair.constraint)
        if _trivial(eq, session) != T_YES:
            proof.note(f"non-trivial critical pair: {eq}")
            return MAYBE
    proof.note(f"all {len(pairs)} critical pairs trivial: weakly orthogonal")
    return YES


def _method_kb(problem, session, proof, params):
    from .termination import prove_termination

    tv = prove_termination(problem, session=session)
    if tv.answer != YES:
        proof.note("termination not established")
        return MAYBE
    proof.note("terminating:")
    proof.extend(tv.proof, indent=1)
    pairs = compute_ccps(problem, session)

    def closer(eq, gen):
        return _close_join(problem, eq, session, gen, params)

    return _close_all_pairs(problem, pairs, closer, session, proof, params)


def _method_sc(problem, session, proof, params):
    if not problem.is_linear():
        proof.note("not linear")
        return MAYBE
    pairs = compute_ccps(problem, session)

    def closer(eq, gen):
        return _close_strong(problem, eq, session, gen, params)

    return _close_all_pairs(problem, pairs, closer, session, proof, params)


def _left_linear_pair_method(problem, session, proof, params, make_closer):
    if not problem.is_left_linear():
        proof.note("not left-linear")
        return MAYBE
    pairs = compute_ccps(problem, session)
    verdict = YES
    for pair in pairs:
        eq = Equation(pair.left, pair.right, pair.constraint)
        proof.note(f"critical pair: {eq}")
        notes: list = []
        closer = make_closer(pair)
        r = _close_with_splits(problem, eq, closer, session,
                               lambda e: _gen_for(problem, e), 0, notes)
        _record_notes(proof, notes)
        if r != "closed":
            proof.note("  not closed")
            verdict = MAYBE
            break
    return verdict


def _method_pc(problem, session, proof, params):
    steps = params.get("steps", 4)
    almost = params.get("almost", False)

    def make_closer(pair):
        def closer(eq, gen):
            side2 = steps if (almost and pair.overlay) else 0
            return _close_parallel(problem, eq, session, gen, params, side2)
        return closer

    return _left_linear_pair_method(problem, session, proof, params,
                                    make_closer)


def _method_apc(problem, session, proof, params):
    return _method_pc(problem, session, proof, dict(params, almost=True))


def _method_dc(problem, session, proof, params):
    steps = params.get("steps", 4)
    almost = params.get("almost", False)

    def make_closer(pair):
        def closer(eq, gen):
            side2 = steps if (almost and pair.overlay) else 0
            return _close_development(problem, eq, session, gen, params,
                                      side2)
        return closer

    return _left_linear_pair_method(problem, session, proof, params,
                                    make_closer)


def _method_adc(problem, session, proof, params):
    return _method_dc(problem, session, proof, dict(params, almost=True))


def _method_pcp(problem, session, proof, params):
    if not problem.is_left_linear():
        proof.note("not left-linear")
        return MAYBE
    steps = params.get("steps", 4)

    # every critical pair must be 1-parallel closed
    def make_closer(_pair):
        def closer(eq, gen):
            return _close_parallel(problem, eq, session, gen, params, steps)
        return closer

    r = _left_linear_pair_method(problem, session, proof, params, make_closer)
    if r != YES:
        return r

    # and every parallel critical pair 2-parallel closed
    try:
        ppairs = compute_cpcps(problem, session)
    except OverlapExplosion as e:
        proof.note(f"parallel overlap explosion: {e}")
        return MAYBE
    for pair in ppairs:
        allowed = term_vars_through(pair.peak, pair.constraint,
                                    pair.positions)

        def closer(eq, gen, _allowed=allowed):
            ct = ConstrainedTerm(eq.right, eq.constraint)
            for result, qset in parallel_steps_pos(problem, ct, session, gen):
                mid = Equation(eq.left, result.term, result.constraint)
                for closed in _one_sided_then(problem, mid, session, gen,
                                              steps, side=1):
                    if _trivial(closed, session) != T_YES:
                        continue
                    touched = term_vars_through(closed.right,
                                                closed.constraint, qset)
                    if touched <= _allowed:
                        return "closed", closed
            return None

        eq = Equation(pair.left, pair.right, pair.constraint)
        proof.note(f"parallel critical pair: {eq}")
        notes: list = []
        r = _close_with_splits(problem, eq, closer, session,
                               lambda e: _gen_for(problem, e), 0, notes)
        _record_notes(proof, notes)
        if r != "closed":
            proof.note("  not closed")
            return MAYBE
    return YES


def _method_nc(problem, session, proof, params):
    """Hunt for a critical pair that rewrites — possibly after splitting —
    to a non-trivial equation in constrained normal form."""
    steps = params.get("steps", 5)
    pairs = compute_ccps(problem, session)
    for pair in pairs:
        base = Equation(pair.left, pair.right, pair.constraint)
        queue = deque([(base.constraint, 0, [])])
        seen = {_fmt(base.constraint)}
        nodes = 0
        while queue and nodes < _NC_NODES:
            phi, depth, trail = queue.popleft()
            nodes += 1
            eq = Equation(base.left, base.right, phi)
            gen = _gen_for(problem, eq)
            _joined, witness = _scan(problem, eq, session, gen, steps)
            if witness is not None:
                proof.note(f"critical pair: {base}")
                for cand in trail:
                    proof.note(f"split on {_fmt(cand)}", 1)
                    proof.add_detail("splits", cand)
                proof.note(f"normal form: {witness}", 1)
                proof.note("non-trivial and no instance rewrites: "
                           "not confluent")
                proof.details["witness"] = witness
                return NO
            if depth < _SPLIT_DEPTH:
                cands = split_candidates((eq.left, eq.right), phi, problem,
                                         session)
                for cand in cands:
                    for half in (mk_and(phi, cand),
                                 mk_and(phi, mk_not(cand))):
                        key = _fmt(half)
                        if key not in seen:
                            seen.add(key)
                            queue.append((half, depth + 1, trail + [cand]))
    proof.note("no non-confluence witness found")
    return MAYBE


METHODS = {
    "wo": _method_wo,
    "o": lambda p, s, pr, pa: _method_wo(p, s, pr, dict(pa, strict=True)),
    "kb": _method_kb,
    "sc": _method_sc,
    "pc": _method_pc,
    "apc": _method_apc,
    "dc": _method_dc,
    "adc": _method_adc,
    "pcp": _method_pcp,
    "nc": _method_nc,
}

DEFAULT_METHODS = ["wo", "sc", "kb", "apc", "adc", "pcp"]


# ------------------------------------------------------------- orchestration


def run_method(problem: Problem, name: str, params=None, session=None,
               solver_command=None) -> Verdict:
    """Evaluate one criterion on its own solver session."""
    if name not in METHODS:
        raise ValueError(f"unknown confluence method {name!r}")
    params = dict(params or {})
    proof = Proof(name)
    own = session is None
    if own:
        session = SmtSession(logic_for(problem.theory.name),
                             command=solver_command)
    start = time.monotonic()
    try:
        answer = METHODS[name](problem, session, proof, params)
    except OverlapExplosion as e:
        proof.note(str(e))
        answer = MAYBE
    except (SolverCancelled, SolverCrashed, SolverError) as e:
        proof.note(f"solver gave up: {e}")
        answer = MAYBE
    finally:
        if own:
            session.close()
    return Verdict(answer, name, proof, time.monotonic() - start)


def prove_confluence(problem: Problem, methods=None, timeout: float = 60.0,
                     threads: int = 8, solver_command=None) -> Verdict:
    """Run the selected criteria (plus the non-confluence check)
    concurrently; the first definitive answer wins and every other task is
    cancelled along with its solver process."""
    chosen = []
    for entry in methods or [(m, {}) for m in DEFAULT_METHODS]:
        name, params = entry if isinstance(entry, tuple) else (entry, {})
        if name not in METHODS:
            raise ValueError(f"unknown confluence method {name!r}")
        chosen.append((name, dict(params)))
    if not any(name == "nc" for name, _ in chosen):
        chosen.append(("nc", {}))

    logic = logic_for(problem.theory.name)
    sessions = [SmtSession(logic, command=solver_command) for _ in chosen]
    results: queue_mod.Queue = queue_mod.Queue()
    start = time.monotonic()

    def work(idx, name, params, session):
        t0 = time.monotonic()
        proof = Proof(name)
        try:
            answer = METHODS[name](problem, session, proof, params)
        except OverlapExplosion as e:
            proof.note(str(e))
            answer = MAYBE
        except (SolverCancelled, SolverCrashed, SolverError):
            answer = MAYBE
        except Exception as e:  # a broken method must not hang the portfolio
            proof.note(f"internal error: {e!r}")
            answer = MAYBE
        results.put(Verdict(answer, name, proof, time.monotonic() - t0))

    winner = None
    losers = []
    deadline = start + timeout
    pool = ThreadPoolExecutor(max_workers=max(1, threads))
    try:
        for idx, (name, params) in enumerate(chosen):
            pool.submit(work, idx, name, params, sessions[idx])
        finished = 0
        while finished < len(chosen):
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                break
            try:
                verdict = results.get(timeout=min(0.1, remaining))
            except queue_mod.Empty:
                continue
            finished += 1
            if verdict.definitive and winner is None:
                winner = verdict
                break
            losers.append(verdict)
    finally:
        for session in sessions:
            session.cancel()
        pool.shutdown(wait=True)
        for session in sessions:
            session.close()

    elapsed = time.monotonic() - start
    if winner is not None:
        winner.elapsed = elapsed
        return winner
    proof = Proof("portfolio")
    if time.monotonic() >= deadline:
        proof.note(f"global timeout after {timeout:g}s")
    for verdict in losers:
        head = verdict.proof.lines[0] if verdict.proof.lines else ""
        proof.note(f"{verdict.method}: {verdict.answer} {head}".rstrip())
    return Verdict(MAYBE, "portfolio", proof, elapsed,
                   reason="no method succeeded")
