"""Self-contained reproduction suite for the worked examples.

Each check returns a :class:`CheckResult`; :func:`run_suite` runs them all
and never raises on a mathematical failure.
"""

from __future__ import annotations

import random
import time
from collections.abc import Callable
from dataclasses import dataclass

from . import reference as ref
from .brackets import bv_laplacian, check_zimes, jacobiator, schouten_old
from .calculus import euler, total_derivative, variational_derivatives
from .cohomology import find_primitive, is_exact
from .dsl import parse_expression, render_expression
from .expr import Expression, JetVariable, MultiIndex, partial, restrict_diagonal
from .geometric import (
    canonicalize_composite,
    distinct_signatures,
    evaluate_terminal,
    geometric_bracket,
    jacobi_expansion,
    jacobiator_geometric,
    lift,
)
from .samples import random_density, random_functional

__all__ = ["CheckResult", "CHECKS", "run_suite", "trivial"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float
    bound: float

    @property
    def in_time(self) -> bool:
        return self.seconds < self.bound


def trivial(d: Expression, base: str = "x") -> bool:
    """Vanishing Euler operators, no constant part, and an explicit primitive."""
    if not is_exact(d, base).is_trivial:
        return False
    return total_derivative(find_primitive(d, base), base) == d


def _golden_brackets():
    F, G, H = ref.functionals()
    pairs = {"F,G": (F, G, ref.BRACKET_FG), "G,H": (G, H, ref.BRACKET_GH), "F,H": (F, H, ref.BRACKET_FH)}
    bad = [k for k, (a, b, src) in pairs.items() if schouten_old(a, b).density != parse_expression(src)]
    return not bad, "mismatch: " + ", ".join(bad) if bad else "3 of 3 exact"


def _euler_table():
    f, h = ref.expr("qd*q*q_xx"), ref.expr("qd_xx*cos(q)")
    table = [(f, False, ref.EULER_F_Q), (h, True, ref.EULER_H_QD), (f, True, ref.EULER_F_QD),
             (h, False, ref.EULER_H_Q)]
    ok = sum(euler(e, odd) == parse_expression(src) for e, odd, src in table)
    return ok == 4, f"{ok} of 4 exact"


def _laplacian_shortcut():
    F, _, H = ref.functionals()
    if not (trivial(bv_laplacian(F).density) and trivial(bv_laplacian(H).density)):
        return False, "Laplacian of F or H not trivial"
    rng = random.Random(2024)
    q0, qd0 = JetVariable(False, 1, MultiIndex()), JetVariable(True, 1, MultiIndex())
    for n in range(50):
        K = random_functional(rng, rng.randint(1, 2))
        short = partial(partial(K.density, qd0, "left"), q0)
        if not trivial(bv_laplacian(K).density - short):
            return False, f"random case {n} failed"
    return True, "F, H and 50 random functionals"


def _zimes():
    F, _, H = ref.functionals()
    r = check_zimes(F, H)
    lhs_ok = trivial(r.lhs_density - parse_expression(ref.ZIMES_FH_LHS))
    lhs_nontrivial = not variational_derivatives(r.lhs_density).vanishes()
    ok = (not r.rhs_density) and lhs_ok and lhs_nontrivial and not r.cohomologically_equal
    return ok, f"rhs zero: {not r.rhs_density}, lhs matches: {lhs_ok}, verdict: {r.cohomologically_equal}"


def _jacobi_single():
    F, G, H = ref.functionals()
    d = jacobiator(F, G, H).density
    target = -total_derivative(ref.residual_primitive(), "x")
    ok = variational_derivatives(d).vanishes() and trivial(d) and trivial(d - target)
    return ok, f"{len(d)} terms; equals the reference form exactly: {d == target}"


def _jacobi_multibase():
    F, G, H = ref.functionals()
    single = jacobiator(F, G, H).density
    multi = jacobiator(*ref.multibase_functionals(), mode="multibase").density
    diag = restrict_diagonal(multi, "x")
    target = -total_derivative(ref.residual_primitive(), "x")
    ok = trivial(diag - single) and trivial(diag - target)
    stretch = multi == ref.multibase_residual()
    return ok, f"{len(multi)} mixed terms; exact match with the reference expression: {stretch}"


def _jacobi_geometric():
    F, G, H = ref.functionals()
    lhs, first, second = jacobi_expansion(F, G, H)
    rhs = first + second
    counts = (len(lhs), distinct_signatures(rhs), len(canonicalize_composite(rhs)))
    empty = not jacobiator_geometric(F, G, H)
    ok = empty and counts == (8, 14, 8)
    return ok, f"empty: {empty}; lhs {counts[0]}, rhs {counts[1]} distinct, {counts[2]} after cancellation"


def _terminal():
    F, G, H = ref.functionals()
    pairs = [(F, G), (G, H), (F, H)]
    rng = random.Random(77)
    pairs += [(random_functional(rng, 1), random_functional(rng, 1)) for _ in range(50)]
    bad = sum(evaluate_terminal(geometric_bracket(lift(a), lift(b)), "x") != schouten_old(a, b).density
              for a, b in pairs)
    return bad == 0, f"{len(pairs) - bad} of {len(pairs)} exact"


def _properties():
    rng = random.Random(99)
    for _ in range(100):
        e = random_density(rng, rng.randint(0, 2))
        if not variational_derivatives(total_derivative(e, "x")).vanishes():
            return False, "Euler of a total derivative is nonzero"
        d = total_derivative(e, "x")
        if total_derivative(find_primitive(d, "x"), "x") != d:
            return False, "primitive round trip failed"
    for _ in range(25):
        if jacobiator_geometric(*(random_functional(rng, 1, terms=2) for _ in range(3))):
            return False, "geometric Jacobiator nonempty"
    return True, "Euler-kills-exact, primitive round trip, geometric Jacobi"


def _dsl_roundtrip():
    from .dsl import parse_functional, render_functional
    rng = random.Random(5)
    for _ in range(200):
        e = random_density(rng, rng.randint(0, 2))
        if parse_expression(render_expression(e)) != e:
            return False, "round trip failed"
    for F in ref.functionals():
        if parse_functional(render_functional(F)) != F:
            return False, "functional round trip failed"
    return True, "200 random expressions and 3 functionals"


CHECKS: list[tuple[str, Callable, float]] = [
    ("golden brackets", _golden_brackets, 3.0),
    ("Euler derivative table", _euler_table, 1.0),
    ("Laplacian shortcut", _laplacian_shortcut, 5.0),
    ("Laplacian is not a derivation of the bracket", _zimes, 2.0),
    ("single-base Jacobi residual", _jacobi_single, 30.0),
    ("multi-base Jacobi residual", _jacobi_multibase, 60.0),
    ("geometric Jacobi identity", _jacobi_geometric, 5.0),
    ("terminal evaluation", _terminal, 10.0),
    ("property spot checks", _properties, 120.0),
    ("DSL round trip", _dsl_roundtrip, 5.0),
]


def run_suite() -> list[CheckResult]:
    results = []
    for name, fn, bound in CHECKS:
        start = time.perf_counter()
        try:
            passed, detail = fn()
        except Exception as exc:  # reported as a failed check
            passed, detail = False, f"error: {exc}"
        results.append(CheckResult(name, passed, detail, time.perf_counter() - start, bound))
    return results
