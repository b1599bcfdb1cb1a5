"""Total derivatives and Euler (variational) derivatives."""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction

from .expr import (
    Expression,
    GradingError,
    Monomial,
    MultiIndex,
    _atom_terms,
    _lower_power,
    partial,
)

__all__ = [
    "total_derivative",
    "iterated_total_derivative",
    "euler",
    "EulerResult",
    "variational_derivatives",
    "odd_degree",
    "highest_order",
    "fields_of",
]


def _raise_odd(odd: tuple, pos: int, label: str):
    """Replace odd[pos] by its raised copy; returns (sign, new tuple) or None."""
    new = odd[pos].raised(label)
    rest = odd[:pos] + odd[pos + 1:]
    j = bisect_left(rest, new)
    if j < len(rest) and rest[j] == new:
        return None
    sign = -1 if abs(j - pos) & 1 else 1
    return sign, rest[:j] + (new,) + rest[j:]


def _total_derivative(expr: Expression, label: str, cache: dict) -> Expression:
    hit = cache.get(expr)
    if hit is not None:
        return hit
    out: dict[Monomial, Fraction] = {}
    derive = lambda e: _total_derivative(e, label, cache)  # noqa: E731
    for m, c in expr._terms.items():
        for pos in range(len(m.odd)):
            r = _raise_odd(m.odd, pos, label)
            if r is None:
                continue
            sign, odd = r
            mm = Monomial(odd, m.even, m.atoms)
            out[mm] = out.get(mm, 0) + (c if sign > 0 else -c)
        for v, p in m.even:
            w = v.raised(label)
            d = dict(_lower_power(m.even, v))
            d[w] = d.get(w, 0) + 1
            mm = Monomial(m.odd, frozenset(d.items()), m.atoms)
            out[mm] = out.get(mm, 0) + c * p
        if m.atoms:
            _atom_terms(m, c, derive, out)
    result = Expression(out)
    cache[expr] = result
    return result


def total_derivative(expr: Expression, label: str) -> Expression:
    """``D_label``: Leibniz and chain rule, raising each jet variable's count at ``label``."""
    return _total_derivative(expr, label, {})


def iterated_total_derivative(expr: Expression, mi: MultiIndex, signed: bool = False) -> Expression:
    """Apply ``D^mi`` (or ``(-D)^mi`` when ``signed``)."""
    for label, n in mi:
        cache: dict = {}
        for _ in range(n):
            expr = _total_derivative(expr, label, cache)
    if signed and mi.order & 1:
        expr = -expr
    return expr


def fields_of(expr: Expression) -> set[tuple[bool, int]]:
    return {v.field for v in expr.variables()}


def euler(expr: Expression, odd: bool, index: int = 1, side: str = "left") -> Expression:
    """Variational derivative ``Σ_σ (-D)^σ ∂/∂(field)_σ`` over all σ present in ``expr``."""
    out = Expression()
    for v in sorted(expr.variables()):
        if v.odd != odd or v.index != index:
            continue
        part = partial(expr, v, side)
        if part:
            out = out + iterated_total_derivative(part, v.deriv, signed=True)
    return out


@dataclass(frozen=True)
class EulerResult:
    """Euler derivatives keyed by ``(odd, index)``; absent fields are zero."""

    by_field: dict = field(default_factory=dict)

    def __getitem__(self, key) -> Expression:
        return self.by_field.get(key, Expression())

    def vanishes(self) -> bool:
        return not any(self.by_field.values())


def variational_derivatives(expr: Expression, side: str = "left") -> EulerResult:
    out = {}
    for f in sorted(fields_of(expr)):
        out[f] = euler(expr, f[0], f[1], side)
    return EulerResult(out)


def odd_degree(expr: Expression) -> int:
    degrees = expr.odd_degrees()
    if len(degrees) > 1:
        raise GradingError(f"inhomogeneous odd degree {sorted(degrees)}")
    return next(iter(degrees)) if degrees else 0


def highest_order(expr: Expression, label: str | None = None) -> int:
    """Maximum derivative count at ``label`` (or maximum total order when None)."""
    best = 0
    for v in expr.variables():
        n = v.deriv.get(label) if label is not None else v.order
        best = max(best, n)
    return best
