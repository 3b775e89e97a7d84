"""Rewrite rules and whole problems."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .terms import App, FreshGen, FunSym, Sort, SymKind, Term, Var, sort_of, variables
from .theory import TRUE, Theory, mk_and, mk_eq


class IllegalRuleRoot(Exception):
    pass


@dataclass(frozen=True)
class Rule:
    lhs: Term
    rhs: Term
    guard: Term = TRUE
    index: int = -1
    is_calc: bool = False

    def __post_init__(self):
        if not isinstance(self.lhs, App):
            raise IllegalRuleRoot("left-hand side must not be a variable")
        if not self.is_calc and self.lhs.sym.is_theory:
            raise IllegalRuleRoot(
                f"left-hand side root {self.lhs.sym.name} is a theory symbol"
            )
        if sort_of(self.lhs) != sort_of(self.rhs):
            raise IllegalRuleRoot("rule sides have different sorts")

    def lvar(self) -> set:
        """Logical variables: guard variables plus rhs-fresh variables."""
        return variables(self.guard) | (variables(self.rhs) - variables(self.lhs))

    def evar(self) -> set:
        """Variables of the rhs that are neither in the lhs nor the guard."""
        return variables(self.rhs) - variables(self.lhs) - variables(self.guard)

    def rhs_fresh(self) -> set:
        return variables(self.rhs) - variables(self.lhs)

    def all_vars(self) -> set:
        return variables(self.lhs) | variables(self.rhs) | variables(self.guard)

    def rename(self, gen: FreshGen) -> "Rule":
        from .terms import apply_subst

        sigma = gen.rename_apart(self.all_vars())
        return Rule(
            apply_subst(self.lhs, sigma),
            apply_subst(self.rhs, sigma),
            apply_subst(self.guard, sigma),
            self.index,
            self.is_calc,
        )

    def __str__(self):
        s = f"{self.lhs} -> {self.rhs}"
        if self.guard != TRUE:
            s += f" [{self.guard}]"
        return s


def calculation_rule(sym: FunSym, gen: FreshGen) -> Rule:
    """f(x1..xn) -> y [y = f(x1..xn)] for a non-value theory symbol."""
    xs = [gen.fresh("x", s) for s in sym.arg_sorts]
    y = gen.fresh("y", sym.result)
    app = App(sym, xs)
    return Rule(app, y, mk_eq(y, app), index=-1, is_calc=True)


@dataclass
class Problem:
    fmt: str
    theory: Theory
    funs: dict  # name -> FunSym, declaration order preserved
    rules: list
    sorts: list = field(default_factory=list)  # declared plain sorts
    origin: str = ""

    def term_symbols(self):
        return [f for f in self.funs.values() if f.kind is SymKind.TERM]

    def defined_symbols(self) -> set:
        return {r.lhs.sym for r in self.rules if not r.is_calc}

    def with_rules(self, rules) -> "Problem":
        rules = [replace(r, index=i) for i, r in enumerate(rules)]
        return replace(self, rules=rules)

    def all_rule_vars(self) -> set:
        out = set()
        for r in self.rules:
            out |= r.all_vars()
        return out

    def lhs_theory_ops(self) -> list:
        """Theory operation symbols applied inside left-hand sides."""
        seen, out = set(), []
        for r in self.rules:
            stack = [r.lhs]
            while stack:
                t = stack.pop()
                if isinstance(t, App):
                    if t.sym.is_theory and not t.sym.is_value and t.sym not in seen:
                        seen.add(t.sym)
                        out.append(t.sym)
                    stack.extend(t.args)
        return out

    def is_left_linear(self) -> bool:
        """Linearity is checked on non-logical variables only."""
        return all(_linear_outside(r.lhs, r.lvar()) for r in self.rules)

    def is_linear(self) -> bool:
        return self.is_left_linear() and all(
            _linear_outside(r.rhs, r.lvar()) for r in self.rules
        )


def _linear_outside(t: Term, logical: set) -> bool:
    seen = set()
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            if s not in logical:
                if s in seen:
                    return False
                seen.add(s)
        else:
            stack.extend(s.args)
    return True
