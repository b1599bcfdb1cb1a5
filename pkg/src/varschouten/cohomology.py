"""Horizontal cohomology over a single base label: exactness tests and primitives."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .calculus import EulerResult, total_derivative, variational_derivatives
from .expr import (
    Expression,
    ExpressionError,
    JetVariable,
    Monomial,
    _lower_power,
    partial,
)

__all__ = [
    "NotExactError",
    "UnsupportedAntiderivativeError",
    "MultiLabelError",
    "TrivialityReport",
    "is_exact",
    "find_primitive",
    "cohomologous",
    "antiderivative",
]

MAX_STEPS = 100_000


class NotExactError(ExpressionError):
    pass


class UnsupportedAntiderivativeError(ExpressionError):
    pass


class MultiLabelError(ExpressionError):
    pass


@dataclass(frozen=True)
class TrivialityReport:
    euler: EulerResult
    constant_part: Fraction
    is_trivial: bool
    primitive: Expression | None = None

    @property
    def euler_q(self) -> Expression:
        return self.euler[(False, 1)]

    @property
    def euler_qdagger(self) -> Expression:
        return self.euler[(True, 1)]

    def render_text(self) -> str:
        if self.is_trivial:
            line = "trivial"
            if self.primitive is not None:
                from .dsl import render_expression
                line += f"; primitive: {render_expression(self.primitive)}"
            return line
        from .dsl import render_expression
        lines = ["nontrivial"]
        for (odd, i), e in sorted(self.euler.by_field.items()):
            if e:
                name = ("qd" if odd else "q") + (str(i) if i != 1 else "")
                lines.append(f"euler[{name}]: {render_expression(e)}")
        if self.constant_part:
            lines.append(f"constant part: {self.constant_part}")
        return "\n".join(lines)

    def render_latex(self) -> str:
        return self.render_text()

    def to_tree(self) -> dict:
        from .dsl import expression_tree
        return {
            "kind": "triviality",
            "is_trivial": self.is_trivial,
            "constant_part": str(self.constant_part),
            "euler": {("qd" if o else "q") + str(i): expression_tree(e)
                      for (o, i), e in sorted(self.euler.by_field.items())},
            "primitive": None if self.primitive is None else expression_tree(self.primitive),
        }


def _check_single_label(d: Expression, base: str):
    extra = d.labels() - {base}
    if extra:
        raise MultiLabelError(
            f"density uses labels {sorted(extra)} besides {base!r}; restrict to the diagonal first")


def is_exact(d: Expression, base: str = "x", with_primitive: bool = False) -> TrivialityReport:
    """Test whether ``∫ d`` is cohomologically trivial (``d = D_base(η)``)."""
    _check_single_label(d, base)
    eul = variational_derivatives(d)
    const = d.constant_term()
    trivial = eul.vanishes() and const == 0
    primitive = find_primitive(d, base) if (with_primitive and trivial) else None
    return TrivialityReport(eul, const, trivial, primitive)


def cohomologous(a: Expression, b: Expression, base: str = "x") -> bool:
    return is_exact(a - b, base).is_trivial


# -- antiderivatives in one even variable -----------------------------------


def _linear_coefficient(arg: Expression, t: JetVariable):
    """Return ``a`` if ``arg = a*t + (t-free)`` with rational ``a``; else None."""
    slope = partial(arg, t)
    if slope.variables() or not slope:
        return None
    return slope.constant_term()


_ATOM_PRIMITIVE = {"exp": ("exp", 1), "sin": ("cos", -1), "cos": ("sin", 1)}


def _antiderivative_monomial(m: Monomial, c: Fraction, t: JetVariable) -> Expression:
    n = dict(m.even).get(t, 0)
    dependent = [(a, p) for a, p in m.atoms if t in a.arg.variables()]
    if not dependent:
        even = dict(m.even)
        even[t] = n + 1
        mm = Monomial(m.odd, frozenset(even.items()), m.atoms)
        return Expression.from_monomial(mm, c / (n + 1))
    if len(dependent) > 1 or dependent[0][1] != 1:
        raise UnsupportedAntiderivativeError(
            f"antiderivative in {t!r} needs more than one function atom")
    atom, _ = dependent[0]
    slope = _linear_coefficient(atom.arg, t)
    if slope is None:
        raise UnsupportedAntiderivativeError(
            f"argument of {atom.kind} is not linear in {t!r}")
    kind, sign = _ATOM_PRIMITIVE[atom.kind]
    # ∫ t^n E(u) dt = t^n E1(u)/a - (n/a) ∫ t^(n-1) E1(u) dt
    rest_atoms = _lower_power(m.atoms, atom)
    even_wo_t = frozenset((v, p) for v, p in m.even if v != t)
    e1 = Expression.atom(kind, atom.arg).scale(Fraction(sign))
    head = Expression.from_monomial(Monomial(m.odd, m.even, rest_atoms), c / slope) * e1
    if n == 0:
        return head
    lower_even = dict(even_wo_t)
    if n > 1:
        lower_even[t] = n - 1
    tail = Expression()
    for mm, cc in (Expression.from_monomial(
            Monomial(m.odd, frozenset(lower_even.items()), rest_atoms), -c * n / slope) * e1).items():
        tail = tail + _antiderivative_monomial(mm, cc, t)
    return head + tail


def antiderivative(a: Expression, t: JetVariable) -> Expression:
    """Some ``P`` with ``∂P/∂t = a`` for even ``t`` in the supported class.

    Supported monomials are ``t^n`` times at most one ``t``-dependent atom
    (power 1, argument linear in ``t``) times ``t``-free factors.
    """
    out = Expression()
    for m, c in a.items():
        out = out + _antiderivative_monomial(m, c, t)
    return out


def find_primitive(d: Expression, base: str = "x") -> Expression:
    """Return ``η`` with ``D_base(η) = d`` exactly, or raise.

    Peels off the highest-order jet variable one at a time: an exact density
    is affine in each top-order variable ``w`` with lower-order coefficient
    ``A``, and ``A`` is then the ``t``-derivative of the primitive where
    ``t`` is ``w`` with one derivative removed.
    """
    _check_single_label(d, base)
    remainder = d
    primitive = Expression()
    for _ in range(MAX_STEPS):
        if not remainder:
            return primitive
        variables = remainder.variables()
        k = max((v.order for v in variables), default=0)
        if k == 0:
            raise NotExactError(f"remainder has no derivatives left: {remainder!r}")
        w = max(v for v in variables if v.order == k)
        coeff = partial(remainder, w, "left")
        if any(v.order >= k for v in coeff.variables()):
            raise NotExactError(f"density is not affine in {w!r} with lower-order coefficient")
        t = w.lowered(base)
        if w.odd:
            if t in coeff.variables():
                raise NotExactError(f"coefficient of {w!r} depends on {t!r}")
            step = Expression.variable(t) * coeff
        else:
            step = antiderivative(coeff, t)
        remainder = remainder - total_derivative(step, base)
        primitive = primitive + step
    raise NotExactError("primitive search did not terminate")
