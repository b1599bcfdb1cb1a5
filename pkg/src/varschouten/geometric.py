"""Brackets with deferred total derivatives.

A bracket here does not integrate by parts.  Each partial derivative
``∂/∂q_σ`` that falls on a factor leaves behind a record ``(−d/dy)^σ``
which is only applied at terminal evaluation.  Later partial derivatives
act on the factor's core and pass under the pending records, so iterated
variations stay graded-permutable and the Jacobi identity holds term by
term, not merely up to exact terms.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import NamedTuple

from .calculus import iterated_total_derivative
from .expr import Expression, Functional, GradingError, MultiIndex, partial, relabel, restrict_diagonal

__all__ = [
    "ShiftLabel",
    "DeferredRecord",
    "DeferredFactor",
    "CompositeTerm",
    "CompositeExpression",
    "lift",
    "geometric_bracket",
    "canonicalize_composite",
    "jacobi_expansion",
    "jacobiator_geometric",
    "evaluate_terminal",
    "distinct_signatures",
]

# Value of the coupling between dual directions: q before q† gives +1,
# q† before q gives -1.
COUPLING_EVEN_FIRST = 1
COUPLING_ODD_FIRST = -1


class ShiftLabel(NamedTuple):
    name: str
    level: int


class DeferredRecord(NamedTuple):
    """A pending ``sign · (d/d label)^order``."""

    sign: int
    order: int
    label: ShiftLabel


@dataclass(frozen=True)
class DeferredFactor:
    core: Expression
    base: str
    deferred: tuple = ()

    @property
    def parity(self) -> int:
        return self.core.parity

    def levels(self) -> set[int]:
        return {r.label.level for r in self.deferred}


@dataclass(frozen=True)
class CompositeTerm:
    scalar: Fraction
    factors: tuple

    @property
    def parity(self) -> int:
        return sum(f.parity for f in self.factors) & 1

    @property
    def odd_degree(self) -> int:
        return sum(len(m.odd) for f in self.factors for _, m in f.core.terms()[:1])

    def max_level(self) -> int:
        return max((lv for f in self.factors for lv in f.levels()), default=0)


@dataclass(frozen=True)
class CompositeExpression:
    terms: tuple = ()

    def __len__(self):
        return len(self.terms)

    def __bool__(self):
        return bool(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __add__(self, other: CompositeExpression) -> CompositeExpression:
        return CompositeExpression(self.terms + other.terms)

    def scale(self, c) -> CompositeExpression:
        c = Fraction(c)
        if c == 0:
            return CompositeExpression()
        return CompositeExpression(tuple(CompositeTerm(t.scalar * c, t.factors) for t in self.terms))

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other: CompositeExpression) -> CompositeExpression:
        return self + (-other)

    @property
    def grading(self) -> int:
        degrees = {t.odd_degree for t in self.terms}
        if len(degrees) > 1:
            raise GradingError(f"composite has mixed odd degrees {sorted(degrees)}")
        return degrees.pop() if degrees else 0

    def max_level(self) -> int:
        return max((t.max_level() for t in self.terms), default=0)

    def render_text(self) -> str:
        return _render(self, "text")

    def render_latex(self) -> str:
        return _render(self, "latex")

    def to_tree(self) -> dict:
        from .dsl import expression_tree
        return {
            "kind": "composite",
            "terms": [{
                "scalar": str(t.scalar),
                "factors": [{
                    "base": f.base,
                    "core": expression_tree(f.core),
                    "deferred": [{"sign": r.sign, "order": r.order, "label": r.label.name,
                                  "level": r.label.level} for r in f.deferred],
                } for f in t.factors],
            } for t in self.terms],
        }


def lift(F: Functional) -> CompositeExpression:
    if not F.density:
        return CompositeExpression()
    return CompositeExpression((CompositeTerm(Fraction(1), (DeferredFactor(F.density, F.base),)),))


def _record(order: int, label: ShiftLabel):
    if order == 0:
        return ()
    return (DeferredRecord(-1 if order & 1 else 1, order, label),)


def _shift_levels(e: CompositeExpression, offset: int) -> CompositeExpression:
    if offset == 0:
        return e
    terms = []
    for t in e.terms:
        factors = tuple(
            DeferredFactor(f.core, f.base, tuple(
                DeferredRecord(r.sign, r.order, ShiftLabel(r.label.name, r.label.level + offset))
                for r in f.deferred))
            for f in t.factors)
        terms.append(CompositeTerm(t.scalar, factors))
    return CompositeExpression(tuple(terms))


def _variations(term: CompositeTerm, side: str):
    """Yield ``(factor index, variable, sign, differentiated core)`` for one term.

    ``side="right"`` differentiates the whole product from the right, so an
    odd variable picks up the parity of the factors after it; ``"left"``
    uses the factors before it.
    """
    parities = [f.parity for f in term.factors]
    for i, f in enumerate(term.factors):
        others = sum(parities[i + 1:]) if side == "right" else sum(parities[:i])
        for v in sorted(f.core.variables()):
            d = partial(f.core, v, side)
            if not d:
                continue
            sign = -1 if (v.odd and others & 1) else 1
            yield i, v, sign, d


def geometric_bracket(A: CompositeExpression, B: CompositeExpression) -> CompositeExpression:
    """Bracket of composites with deferred integrations by parts.

    Every variation of a factor of ``A`` in ``q_σ`` (resp. ``q†_σ``) pairs with
    every variation of a factor of ``B`` in ``q†_τ`` (resp. ``q_τ``) of the
    same component.  The differentiated factors gain records ``(−d/dy)^σ`` and
    ``(−d/dz)^τ`` at a fresh nesting level; the term gets the coupling value.
    """
    if not A or not B:
        return CompositeExpression()
    B = _shift_levels(B, A.max_level())
    level = max(A.max_level(), B.max_level()) + 1
    y, z = ShiftLabel(f"y{level}", level), ShiftLabel(f"z{level}", level)
    out = []
    for a in A.terms:
        a_vars = list(_variations(a, "right"))
        for b in B.terms:
            b_vars = list(_variations(b, "left"))
            for i, v, sa, da in a_vars:
                fa = a.factors[i]
                new_a = DeferredFactor(da, fa.base, fa.deferred + _record(v.order, y))
                coupling = COUPLING_ODD_FIRST if v.odd else COUPLING_EVEN_FIRST
                for k, u, sb, db in b_vars:
                    if u.odd == v.odd or u.index != v.index:
                        continue
                    fb = b.factors[k]
                    new_b = DeferredFactor(db, fb.base, fb.deferred + _record(u.order, z))
                    factors = a.factors[:i] + (new_a,) + a.factors[i + 1:] \
                        + b.factors[:k] + (new_b,) + b.factors[k + 1:]
                    out.append(CompositeTerm(a.scalar * b.scalar * (coupling * sa * sb), factors))
    return CompositeExpression(tuple(out))


# -- canonical form ---------------------------------------------------------


def _normalized_core(core: Expression):
    """Split ``core = c · core'`` with the leading coefficient of ``core'`` equal to 1."""
    lead = core.terms()[0][0]
    return lead, core.scale(1 / lead)


def _factor_key(f: DeferredFactor, level_map: dict):
    recs = tuple(sorted((level_map[r.label.level], r.order, r.sign) for r in f.deferred))
    return (f.base, f.core.sort_key(), recs)


def _canonical_term(t: CompositeTerm):
    """Return ``(key, scalar, factors)`` or None when the term vanishes."""
    scalar = t.scalar
    factors = []
    for f in t.factors:
        lead, core = _normalized_core(f.core)
        scalar *= lead
        factors.append(DeferredFactor(core, f.base, f.deferred))
    levels = sorted({lv for f in factors for lv in f.levels()})
    best = None
    for perm in permutations(range(1, len(levels) + 1)):
        level_map = dict(zip(levels, perm))
        keyed = [(_factor_key(f, level_map), f) for f in factors]
        order = sorted(range(len(keyed)), key=lambda j: keyed[j][0])
        key = tuple(keyed[j][0] for j in order)
        if best is None or key < best[0]:
            best = (key, order, level_map)
    key, order, level_map = best
    # Koszul sign of the permutation restricted to odd factors
    odd_positions = [j for j in order if factors[j].parity]
    inversions = sum(1 for p in range(len(odd_positions)) for q in range(p + 1, len(odd_positions))
                     if odd_positions[p] > odd_positions[q])
    if inversions & 1:
        scalar = -scalar
    for p in range(len(key) - 1):
        if key[p] == key[p + 1] and factors[order[p]].parity:
            return None
    canon = []
    for j, k in zip(order, key):
        f = factors[j]
        recs = tuple(DeferredRecord(sign, o, ShiftLabel(f"s{lv}", lv)) for lv, o, sign in k[2])
        canon.append(DeferredFactor(f.core, f.base, recs))
    return key, scalar, tuple(canon)


def canonicalize_composite(e: CompositeExpression) -> CompositeExpression:
    """Merge terms equal up to shift labels and a relabelling of nesting levels."""
    merged: dict = {}
    for t in e.terms:
        r = _canonical_term(t)
        if r is None:
            continue
        key, scalar, factors = r
        if key in merged:
            merged[key] = (merged[key][0] + scalar, factors)
        else:
            merged[key] = (scalar, factors)
    terms = tuple(CompositeTerm(s, fs) for key, (s, fs) in sorted(merged.items()) if s)
    return CompositeExpression(terms)


def distinct_signatures(e: CompositeExpression) -> int:
    """Number of distinct canonical term shapes, before scalars are combined."""
    return len({r[0] for r in map(_canonical_term, e.terms) if r is not None})


# -- Jacobi identity ----------------------------------------------------------


JACOBI_BASES = ("x1", "x2", "x3")


def _on_base(F: Functional, label: str) -> Functional:
    extra = F.density.labels() - {F.base}
    if extra:
        raise ValueError(f"functional on {F.base!r} uses other labels {sorted(extra)}")
    if F.base == label:
        return F
    return Functional(relabel(F.density, {F.base: label}), label)


def jacobi_expansion(F: Functional, G: Functional, H: Functional):
    """Raw ``(⟦F,⟦G,H⟧⟧, ⟦⟦F,G⟧,H⟧, ε⟦G,⟦F,H⟧⟧)`` on bases x1, x2, x3."""
    eps = -1 if ((F.grading - 1) * (G.grading - 1)) & 1 else 1
    F, G, H = (lift(_on_base(K, b)) for K, b in zip((F, G, H), JACOBI_BASES))
    lhs = geometric_bracket(F, geometric_bracket(G, H))
    first = geometric_bracket(geometric_bracket(F, G), H)
    second = geometric_bracket(G, geometric_bracket(F, H)).scale(eps)
    return lhs, first, second


def jacobiator_geometric(F: Functional, G: Functional, H: Functional) -> CompositeExpression:
    lhs, first, second = jacobi_expansion(F, G, H)
    return canonicalize_composite(lhs - first - second)


# -- terminal evaluation --------------------------------------------------------


def evaluate_terminal(e: CompositeExpression, target: str = "x") -> Expression:
    """Apply every pending record as a total derivative, restrict, and multiply out."""
    out = Expression()
    for t in e.terms:
        prod = Expression.constant(t.scalar)
        for f in t.factors:
            value = f.core
            for r in f.deferred:
                value = iterated_total_derivative(value, MultiIndex(((f.base, r.order),)))
                if r.sign < 0:
                    value = -value
            prod = prod * restrict_diagonal(relabel(value, {f.base: target}), target)
        out = out + prod
    return out


# -- rendering --------------------------------------------------------------------


def _record_text(r: DeferredRecord, latex: bool) -> str:
    sign = "-" if r.sign < 0 else ""
    name = r.label.name
    if latex:
        lab = name if len(name) == 1 else f"{name[0]}_{{{name[1:]}}}"
        power = "" if r.order == 1 else f"^{{{r.order}}}"
        return f"\\lceil {sign}\\tfrac{{\\mathrm{{d}}{power}}}{{\\mathrm{{d}}{lab}{power}}}\\rceil"
    power = "" if r.order == 1 else f"^{r.order}"
    return f"[{sign}d{power}/d{name}{power}]"


def _render(e: CompositeExpression, fmt: str) -> str:
    from .dsl import latex_expression, render_expression
    if not e:
        return "0 (empty composite)" if fmt == "text" else "0"
    latex = fmt == "latex"
    expr = latex_expression if latex else render_expression
    lines = []
    for t in e.terms:
        parts = []
        for f in t.factors:
            recs = "".join(_record_text(r, latex) for r in reversed(f.deferred))
            if latex:
                base = f.base if len(f.base) == 1 else f"{f.base[0]}_{{{f.base[1:]}}}"
                parts.append(f"{recs}\\bigl({expr(f.core)}\\bigr)_{{{base}}}")
            else:
                parts.append(f"{recs}({expr(f.core)})@{f.base}")
        sign = "-" if t.scalar < 0 else "+"
        mag = abs(t.scalar)
        coef = str(mag) if mag.denominator == 1 else f"{mag.numerator}/{mag.denominator}"
        joiner = " \\cdot " if latex else " * "
        lines.append(f"{sign}{coef}{joiner}" + joiner.join(parts))
    return "\n".join(lines)
