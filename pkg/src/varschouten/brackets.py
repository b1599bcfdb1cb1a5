"""Old-style variational Schouten bracket, naive BV Laplacian and identity checks.

Every bracket here is evaluated eagerly: integrations by parts are carried
out immediately, so nested brackets interlace total and partial derivatives.
This reproduces the cohomologically trivial but nonzero Jacobi residual.
"""

from __future__ import annotations

from dataclasses import dataclass

from .calculus import euler, fields_of, iterated_total_derivative
from .cohomology import is_exact
from .expr import Expression, ExpressionError, Functional, JetVariable, MultiIndex, partial, relabel

__all__ = [
    "schouten_old",
    "bv_laplacian",
    "jacobiator",
    "jacobi_terms",
    "IdentityReport",
    "check_zimes",
    "delta_squared",
    "evolutionary_commutator",
    "prolonged_action",
    "rebase",
]


def rebase(F: Functional, label: str) -> Functional:
    """Rename the integration label of ``F`` (and its derivative labels) to ``label``."""
    if F.base == label:
        return F
    return Functional(relabel(F.density, {F.base: label}), label)


def _indices(*exprs: Expression) -> list[int]:
    return sorted({i for e in exprs for _, i in fields_of(e)})


def schouten_old(F: Functional, G: Functional) -> Functional:
    """``∫ (f)δ←/δq · δ→/δq†(g) − (f)δ←/δq† · δ→/δq(g)``, integrated over G's base."""
    f, g = F.density, G.density
    out = Expression()
    for i in _indices(f, g):
        a = euler(f, False, i, "right")
        if a:
            out = out + a * euler(g, True, i, "left")
        b = euler(f, True, i, "right")
        if b:
            out = out - b * euler(g, False, i, "left")
    return Functional(out, G.base)


def bv_laplacian(F: Functional) -> Functional:
    """Naive Laplacian ``∫ δ→/δq ∘ δ→/δq† (f)``, summed over field indices."""
    f = F.density
    out = Expression()
    for i in _indices(f):
        inner = euler(f, True, i, "left")
        if inner:
            out = out + euler(inner, False, i, "left")
    return Functional(out, F.base)


def _sign(F: Functional, G: Functional) -> int:
    return -1 if ((F.grading - 1) * (G.grading - 1)) & 1 else 1


def jacobi_terms(F: Functional, G: Functional, H: Functional, mode: str = "single"):
    """The three nested brackets ``(⟦F,⟦G,H⟧⟧, ⟦⟦F,G⟧,H⟧, ⟦G,⟦F,H⟧⟧)``.

    ``single`` puts all three functionals on F's base; ``multibase`` puts
    them on ``x``, ``y`` and ``z`` and keeps the mixed result.
    """
    if mode == "single":
        F, G, H = (rebase(K, F.base) for K in (F, G, H))
    elif mode == "multibase":
        F, G, H = rebase(F, "x"), rebase(G, "y"), rebase(H, "z")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    lhs = schouten_old(F, schouten_old(G, H))
    first = schouten_old(schouten_old(F, G), H)
    second = schouten_old(G, schouten_old(F, H))
    return lhs, first, second


def jacobiator(F: Functional, G: Functional, H: Functional, mode: str = "single") -> Functional:
    """``⟦F,⟦G,H⟧⟧ − ⟦⟦F,G⟧,H⟧ − (−1)^{(|F|−1)(|G|−1)} ⟦G,⟦F,H⟧⟧``."""
    lhs, first, second = jacobi_terms(F, G, H, mode)
    density = lhs.density - first.density - second.density.scale(_sign(F, G))
    return Functional(density, lhs.base)


@dataclass(frozen=True)
class IdentityReport:
    lhs_density: Expression
    rhs_density: Expression
    difference: Expression
    cohomologically_equal: bool
    exactly_equal: bool
    base: str = "x"

    @classmethod
    def compare(cls, lhs: Expression, rhs: Expression, base: str) -> IdentityReport:
        diff = lhs - rhs
        exact = not diff
        coh = exact or is_exact(diff, base).is_trivial
        return cls(lhs, rhs, diff, coh, exact, base)

    def render_text(self) -> str:
        from .dsl import render_expression
        return "\n".join([
            f"lhs: {render_expression(self.lhs_density)}",
            f"rhs: {render_expression(self.rhs_density)}",
            f"difference: {render_expression(self.difference)}",
            f"exactly equal: {'yes' if self.exactly_equal else 'no'}",
            f"cohomologically equal: {'yes' if self.cohomologically_equal else 'no'}",
        ])

    def render_latex(self) -> str:
        from .dsl import latex_expression
        rel = "=" if self.exactly_equal else ("\\cong" if self.cohomologically_equal else "\\not\\cong")
        return f"{latex_expression(self.lhs_density)} {rel} {latex_expression(self.rhs_density)}"

    def to_tree(self) -> dict:
        from .dsl import expression_tree
        return {
            "kind": "identity",
            "base": self.base,
            "lhs": expression_tree(self.lhs_density),
            "rhs": expression_tree(self.rhs_density),
            "difference": expression_tree(self.difference),
            "exactly_equal": self.exactly_equal,
            "cohomologically_equal": self.cohomologically_equal,
        }


def check_zimes(F: Functional, G: Functional) -> IdentityReport:
    """Compare ``Δ⟦F,G⟧`` with ``⟦ΔF,G⟧ + (−1)^{|F|−1} ⟦F,ΔG⟧`` on F's base."""
    G = rebase(G, F.base)
    lhs = bv_laplacian(schouten_old(F, G)).density
    sign = -1 if (F.grading - 1) & 1 else 1
    rhs = schouten_old(bv_laplacian(F), G).density + \
        schouten_old(F, bv_laplacian(G)).density.scale(sign)
    return IdentityReport.compare(lhs, rhs, F.base)


def delta_squared(F: Functional) -> IdentityReport:
    """Report on ``Δ(ΔF)`` against zero."""
    lhs = bv_laplacian(bv_laplacian(F)).density
    return IdentityReport.compare(lhs, Expression(), F.base)


def prolonged_action(X: Expression, Y: Expression, index: int = 1) -> Expression:
    """Evolutionary derivative ``X(Y) = Σ_σ D^σ(X) ∂Y/∂q_σ`` for a single field."""
    out = Expression()
    for v in sorted(Y.variables()):
        if v.odd or v.index != index:
            continue
        dy = partial(Y, v)
        if dy:
            out = out + iterated_total_derivative(X, v.deriv) * dy
    return out


def evolutionary_commutator(X: Expression, Y: Expression, base: str = "x") -> IdentityReport:
    """Compare ``⟦∫Xq†, ∫Yq†⟧`` with ``−∫ (X(Y) − Y(X)) q†``."""
    for e in (X, Y):
        if any(v.odd for v in e.variables()):
            raise ExpressionError(f"evolutionary components must be even: {e!r}")
    qd = Expression.variable(JetVariable(True, 1, MultiIndex()))
    bracket = schouten_old(Functional(X * qd, base), Functional(Y * qd, base)).density
    comm = prolonged_action(X, Y) - prolonged_action(Y, X)
    return IdentityReport.compare(bracket, -(comm * qd), base)
