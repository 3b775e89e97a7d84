"""The bundled solver's linear-arithmetic core, cross-checked by brute force."""

import itertools
import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from lctrs.solver.arith import SAT, UNKNOWN, UNSAT, LinAtom, solve_int, solve_real


def _holds(atom, model):
    v = sum(c * model.get(x, 0) for x, c in atom.coeffs.items()) + atom.const
    if atom.rel == "<=":
        return v <= 0
    if atom.rel == "<":
        return v < 0
    if atom.rel == "=":
        return v == 0
    return v != 0


def _brute_int(atoms, lo=-6, hi=6):
    vars_ = sorted({v for a in atoms for v in a.coeffs})
    for vals in itertools.product(range(lo, hi + 1), repeat=len(vars_)):
        model = dict(zip(vars_, vals))
        if all(_holds(a, model) for a in atoms):
            return model
    return None


def _atoms(rng, nvars=3, natoms=4):
    names = ["x", "y", "z", "w"][:nvars]
    out = []
    for _ in range(rng.randint(1, natoms)):
        coeffs = {n: rng.randint(-3, 3) for n in rng.sample(names, rng.randint(1, nvars))}
        out.append(LinAtom(coeffs, rng.randint(-6, 6), rng.choice(["<=", "<", "=", "!="])))
    return out


def test_random_conjunctions_agree_with_brute_force():
    rng = random.Random(7)
    checked = 0
    for _ in range(400):
        atoms = _atoms(rng)
        status, model = solve_int(atoms)
        witness = _brute_int(atoms)
        if status == SAT:
            assert all(_holds(a, model) for a in atoms), (atoms, model)
        elif status == UNSAT:
            assert witness is None, (atoms, witness)
        if witness is not None and status != UNKNOWN:
            assert status == SAT
        checked += 1
    assert checked == 400


def test_gcd_tightening_regression():
    # 2m - n = 0 together with n > 0 has solutions; an incorrectly rounded
    # bound after dividing by the gcd used to hide them
    atoms = [
        LinAtom({"m": 2, "n": -1}, 0, "="),
        LinAtom({"n": -1}, 1, "<="),  # n >= 1
    ]
    status, model = solve_int(atoms)
    assert status == SAT
    assert all(_holds(a, model) for a in atoms)


def test_strict_bound_on_scaled_variable():
    # 3x < 1 over the integers forces x <= 0
    status, model = solve_int([LinAtom({"x": 3}, -1, "<")])
    assert status == SAT and model["x"] <= 0
    status, _ = solve_int([LinAtom({"x": 3}, -1, "<"), LinAtom({"x": -1}, 1, "<=")])
    assert status == UNSAT


def test_equality_elimination_keeps_divisibility():
    # 2x = y and y = 3 has no integer solution
    atoms = [LinAtom({"x": 2, "y": -1}, 0, "="), LinAtom({"y": 1}, -3, "=")]
    status, _ = solve_int(atoms)
    assert status == UNSAT


def test_disequality_branching():
    # x != 0, x <= 0, x >= 0 is unsatisfiable
    atoms = [
        LinAtom({"x": 1}, 0, "!="),
        LinAtom({"x": 1}, 0, "<="),
        LinAtom({"x": -1}, 0, "<="),
    ]
    assert solve_int(atoms)[0] == UNSAT


def test_real_strict_chain():
    # 0 < x < 1 has rational solutions but no integer ones
    atoms = [LinAtom({"x": -1}, 0, "<"), LinAtom({"x": 1}, -1, "<")]
    status, model = solve_real(atoms)
    assert status == SAT and 0 < model["x"] < 1
    assert solve_int(atoms)[0] == UNSAT


def test_real_model_values_are_exact():
    atoms = [LinAtom({"x": 2}, -1, "=")]  # 2x = 1
    status, model = solve_real(atoms)
    assert status == SAT
    assert model["x"] == Fraction(1, 2)


@settings(max_examples=60)
@given(st.integers(-4, 4), st.integers(-4, 4), st.integers(-8, 8))
def test_single_atom_feasibility(a, b, c):
    atoms = [LinAtom({"x": a, "y": b}, c, "<=")]
    status, model = solve_int(atoms)
    if a == 0 and b == 0:
        assert status == (SAT if c <= 0 else UNSAT)
    else:
        assert status == SAT
        assert _holds(atoms[0], model)
