"""Graded differential polynomials over jet variables.

An :class:`Expression` is a finite sum of monomials with exact rational
coefficients.  A monomial is a product of

* parity-odd jet variables ``q†_{i,σ}`` kept in a strictly increasing
  canonical order (reordering produces signs, repeats vanish),
* parity-even jet variables ``q^i_σ`` with positive integer powers,
* opaque function atoms ``exp(u)``, ``sin(u)``, ``cos(u)`` of parity-even
  arguments, also with positive integer powers.

No identities between atoms are applied, so equality of canonical forms is
purely syntactic.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Union

__all__ = [
    "ExpressionError",
    "MalformedExpressionError",
    "GradingError",
    "MultiIndex",
    "JetVariable",
    "FunctionAtom",
    "Monomial",
    "Expression",
    "Functional",
    "ATOM_KINDS",
    "q",
    "qd",
    "const",
    "exp",
    "sin",
    "cos",
    "normalize",
    "partial",
    "map_variables",
    "relabel",
    "restrict_diagonal",
]

ATOM_KINDS = ("exp", "sin", "cos")

Scalar = Union[int, Fraction]


class ExpressionError(ValueError):
    pass


class MalformedExpressionError(ExpressionError):
    """An expression tree violates a structural invariant."""


class GradingError(ExpressionError):
    """A density is not homogeneous in its odd degree."""


class MultiIndex(tuple):
    """Derivative counts per base label, stored as sorted ``(label, count)`` pairs.

    Absent labels have count zero.  Ordering is the plain lexicographic
    order of the pair tuples.
    """

    __slots__ = ()

    def __new__(cls, counts: Mapping[str, int] | Iterable[tuple[str, int]] = ()):
        items = counts.items() if isinstance(counts, Mapping) else counts
        merged: dict[str, int] = {}
        for label, n in items:
            if n < 0:
                raise ValueError(f"negative derivative count {n} for {label!r}")
            merged[label] = merged.get(label, 0) + n
        return tuple.__new__(cls, sorted((l, n) for l, n in merged.items() if n))

    @classmethod
    def _from_sorted(cls, pairs) -> MultiIndex:
        return tuple.__new__(cls, pairs)

    @classmethod
    def of(cls, **counts: int) -> MultiIndex:
        return cls(counts)

    @property
    def order(self) -> int:
        return sum(n for _, n in self)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self)

    def get(self, label: str) -> int:
        for l, n in self:
            if l == label:
                return n
        return 0

    def raised(self, label: str, n: int = 1) -> MultiIndex:
        out = []
        done = False
        for l, c in self:
            if l == label:
                out.append((l, c + n))
                done = True
            else:
                out.append((l, c))
        if not done:
            out.append((label, n))
            out.sort()
        return MultiIndex._from_sorted(out)

    def lowered(self, label: str) -> MultiIndex:
        c = self.get(label)
        if c == 0:
            raise ValueError(f"cannot lower {self!r} in {label!r}")
        return MultiIndex({**dict(self), label: c - 1})

    def collapsed(self, target: str) -> MultiIndex:
        n = self.order
        return MultiIndex._from_sorted(((target, n),) if n else ())

    def renamed(self, mapping: Mapping[str, str]) -> MultiIndex:
        return MultiIndex((mapping.get(l, l), n) for l, n in self)

    def __repr__(self):
        return "MultiIndex(%s)" % ", ".join(f"{l}={n}" for l, n in self)


class JetVariable(NamedTuple):
    """A jet coordinate ``q^i_σ`` (``odd=False``) or ``q†_{i,σ}`` (``odd=True``)."""

    odd: bool
    index: int
    deriv: MultiIndex

    @property
    def parity(self) -> int:
        return 1 if self.odd else 0

    @property
    def order(self) -> int:
        return self.deriv.order

    @property
    def field(self) -> tuple[bool, int]:
        return (self.odd, self.index)

    def raised(self, label: str, n: int = 1) -> JetVariable:
        return JetVariable(self.odd, self.index, self.deriv.raised(label, n))

    def lowered(self, label: str) -> JetVariable:
        return JetVariable(self.odd, self.index, self.deriv.lowered(label))

    def __repr__(self):
        name = ("qd" if self.odd else "q") + (str(self.index) if self.index != 1 else "")
        if self.deriv:
            name += "_" + "".join(l * n for l, n in self.deriv)
        return name


class FunctionAtom(NamedTuple):
    kind: str
    arg: Expression

    def __repr__(self):
        return f"{self.kind}({self.arg!r})"


class Monomial(NamedTuple):
    """Coefficient-free part of a term.

    ``odd`` is strictly increasing; ``even`` and ``atoms`` are frozensets of
    ``(factor, power)`` pairs with positive powers.
    """

    odd: tuple
    even: frozenset
    atoms: frozenset

    @property
    def odd_degree(self) -> int:
        return len(self.odd)

    def sort_key(self):
        return (
            self.odd,
            tuple(sorted(self.even)),
            tuple(sorted((_atom_key(a), p) for a, p in self.atoms)),
        )


_EMPTY = frozenset()
UNIT = Monomial((), _EMPTY, _EMPTY)


def _atom_key(atom: FunctionAtom):
    return (atom.kind, atom.arg.sort_key())


def _merge_odd(a: tuple, b: tuple):
    """Sorted concatenation of two odd factor lists: ``(sign, merged)`` or None."""
    if not a:
        return 1, b
    if not b:
        return 1, a
    out = []
    i = j = 0
    la, lb = len(a), len(b)
    inversions = 0
    while i < la and j < lb:
        x, y = a[i], b[j]
        if x < y:
            out.append(x)
            i += 1
        elif y < x:
            out.append(y)
            inversions += la - i
            j += 1
        else:
            return None
    out.extend(a[i:])
    out.extend(b[j:])
    return (-1 if inversions & 1 else 1), tuple(out)


def _merge_powers(a: frozenset, b: frozenset) -> frozenset:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for k, p in b:
        d[k] = d.get(k, 0) + p
    return frozenset(d.items())


def _sort_odd(factors: list):
    """Sort odd factors with sign; None if some factor repeats."""
    factors = list(factors)
    sign = 1
    for i in range(1, len(factors)):
        j = i
        while j > 0 and factors[j - 1] > factors[j]:
            factors[j - 1], factors[j] = factors[j], factors[j - 1]
            sign = -sign
            j -= 1
        if j > 0 and factors[j - 1] == factors[j]:
            return None
    return sign, tuple(factors)


def _mono_mul(m1: Monomial, m2: Monomial):
    merged = _merge_odd(m1.odd, m2.odd)
    if merged is None:
        return None
    sign, odd = merged
    return sign, Monomial(odd, _merge_powers(m1.even, m2.even), _merge_powers(m1.atoms, m2.atoms))


class Expression:
    """Canonical graded expression; immutable, hashable, exactly comparable."""

    __slots__ = ("_terms", "_hash", "_vars", "_key")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        # Internal constructor: keys must already be canonical monomials.
        self._terms = {m: c for m, c in (terms or {}).items() if c}
        self._hash = None
        self._vars = None
        self._key = None

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, c: Scalar) -> Expression:
        return cls({UNIT: Fraction(c)})

    @classmethod
    def variable(cls, v: JetVariable) -> Expression:
        if v.odd:
            return cls({Monomial((v,), _EMPTY, _EMPTY): Fraction(1)})
        return cls({Monomial((), frozenset(((v, 1),)), _EMPTY): Fraction(1)})

    @classmethod
    def atom(cls, kind: str, arg: Expression) -> Expression:
        if kind not in ATOM_KINDS:
            raise MalformedExpressionError(f"unknown function {kind!r}")
        if not isinstance(arg, Expression):
            arg = normalize(arg)
        if any(m.odd for m in arg._terms):
            raise MalformedExpressionError(f"argument of {kind} must be parity-even: {arg}")
        if not arg:
            return cls.constant(0 if kind == "sin" else 1)
        if not arg.variables():
            raise MalformedExpressionError(
                f"argument of {kind} must depend on jet variables: {arg}")
        return cls({Monomial((), _EMPTY, frozenset(((FunctionAtom(kind, arg), 1),))): Fraction(1)})

    @classmethod
    def from_monomial(cls, m: Monomial, c: Scalar = 1) -> Expression:
        return cls({m: Fraction(c)})

    # -- inspection -------------------------------------------------------

    def terms(self) -> list[tuple[Fraction, Monomial]]:
        """Terms in canonical (deterministic) order."""
        return [(self._terms[m], m) for m in sorted(self._terms, key=Monomial.sort_key)]

    def items(self):
        return self._terms.items()

    def coefficient(self, m: Monomial) -> Fraction:
        return self._terms.get(m, Fraction(0))

    def constant_term(self) -> Fraction:
        return self._terms.get(UNIT, Fraction(0))

    def variables(self) -> frozenset:
        """All jet variables, including those inside atom arguments."""
        if self._vars is None:
            vs = set()
            for m in self._terms:
                vs.update(m.odd)
                vs.update(v for v, _ in m.even)
                for a, _ in m.atoms:
                    vs.update(a.arg.variables())
            self._vars = frozenset(vs)
        return self._vars

    def labels(self) -> frozenset:
        return frozenset(l for v in self.variables() for l in v.deriv.labels)

    def odd_degrees(self) -> frozenset:
        return frozenset(len(m.odd) for m in self._terms)

    def is_homogeneous(self) -> bool:
        return len(self.odd_degrees()) <= 1

    @property
    def parity(self) -> int:
        degrees = self.odd_degrees()
        parities = {d & 1 for d in degrees}
        if len(parities) > 1:
            raise GradingError(f"expression has mixed parity: {self!r}")
        return parities.pop() if parities else 0

    def sort_key(self):
        if self._key is None:
            self._key = tuple((m.sort_key(), c) for c, m in self.terms())
        return self._key

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __iter__(self):
        return iter(self.terms())

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Expression.constant(other)
        if not isinstance(other, Expression):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __repr__(self):
        from .dsl import render_expression
        return f"Expression({render_expression(self)!r})"

    def __str__(self):
        from .dsl import render_expression
        return render_expression(self)

    # -- arithmetic -------------------------------------------------------

    @staticmethod
    def _coerce(x) -> Expression:
        if isinstance(x, Expression):
            return x
        if isinstance(x, (int, Fraction)):
            return Expression.constant(x)
        if isinstance(x, JetVariable):
            return Expression.variable(x)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not other._terms:
            return self
        if not self._terms:
            return other
        d = dict(self._terms)
        for m, c in other._terms.items():
            d[m] = d.get(m, 0) + c
        return Expression(d)

    __radd__ = __add__

    def __neg__(self):
        return Expression({m: -c for m, c in self._terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def scale(self, c: Scalar) -> Expression:
        c = Fraction(c)
        if c == 1:
            return self
        return Expression({m: c * v for m, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self._terms or not other._terms:
            return Expression()
        d: dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                r = _mono_mul(m1, m2)
                if r is None:
                    continue
                sign, m = r
                d[m] = d.get(m, 0) + (c1 * c2 if sign > 0 else -(c1 * c2))
        return Expression(d)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other * self

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(Fraction(1) / Fraction(other))
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise MalformedExpressionError(f"exponent must be a nonnegative integer, got {n!r}")
        result = Expression.constant(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result


def const(c: Scalar) -> Expression:
    return Expression.constant(c)


def q(*labels: str, index: int = 1, **counts: int) -> Expression:
    """Even jet variable; ``q("x", "x")`` and ``q(x=2)`` both give ``q_xx``."""
    return Expression.variable(JetVariable(False, index, _mi(labels, counts)))


def qd(*labels: str, index: int = 1, **counts: int) -> Expression:
    """Odd jet variable ``q†``."""
    return Expression.variable(JetVariable(True, index, _mi(labels, counts)))


def _mi(labels, counts) -> MultiIndex:
    pairs = [(l, 1) for l in labels] + list(counts.items())
    return MultiIndex(pairs)


def exp(arg) -> Expression:
    return Expression.atom("exp", arg)


def sin(arg) -> Expression:
    return Expression.atom("sin", arg)


def cos(arg) -> Expression:
    return Expression.atom("cos", arg)


def normalize(node) -> Expression:
    """Canonicalize an expression tree.

    Leaves are ints, Fractions, :class:`JetVariable` or :class:`Expression`.
    Inner nodes are tuples ``("add", *children)``, ``("mul", *children)``,
    ``("pow", base, n)`` or ``(kind, arg)`` with kind in ``exp/sin/cos``.
    """
    if isinstance(node, Expression):
        return node
    if isinstance(node, bool):
        raise MalformedExpressionError(f"unexpected leaf {node!r}")
    if isinstance(node, (int, Fraction)):
        return Expression.constant(node)
    if isinstance(node, JetVariable):
        return Expression.variable(node)
    if isinstance(node, tuple) and node and isinstance(node[0], str):
        op, *args = node
        if op == "add":
            out = Expression()
            for a in args:
                out = out + normalize(a)
            return out
        if op == "mul":
            out = Expression.constant(1)
            for a in args:
                out = out * normalize(a)
            return out
        if op == "pow":
            if len(args) != 2 or not isinstance(args[1], int):
                raise MalformedExpressionError(f"bad power node {node!r}")
            return normalize(args[0]) ** args[1]
        if op in ATOM_KINDS:
            if len(args) != 1:
                raise MalformedExpressionError(f"{op} takes one argument")
            return Expression.atom(op, normalize(args[0]))
    raise MalformedExpressionError(f"cannot normalize {node!r}")


# -- derivations ----------------------------------------------------------


def _atom_derivative(atom: FunctionAtom) -> Expression:
    """d/du of the atom, as a function of its own argument u."""
    if atom.kind == "exp":
        return Expression.atom("exp", atom.arg)
    if atom.kind == "sin":
        return Expression.atom("cos", atom.arg)
    return -Expression.atom("sin", atom.arg)


def _lower_power(powers: frozenset, key) -> frozenset:
    d = dict(powers)
    p = d.pop(key)
    if p > 1:
        d[key] = p - 1
    return frozenset(d.items())


def _atom_terms(m: Monomial, c: Fraction, derive_arg: Callable, out: dict):
    """Chain-rule contributions of the atoms of ``c*m`` under an even derivation."""
    for atom, p in m.atoms:
        darg = derive_arg(atom.arg)
        if not darg:
            continue
        rest = Expression.from_monomial(Monomial(m.odd, m.even, _lower_power(m.atoms, atom)), c * p)
        piece = rest * _atom_derivative(atom) * darg
        for mm, cc in piece._terms.items():
            out[mm] = out.get(mm, 0) + cc


def _partial_even(expr: Expression, v: JetVariable, cache: dict) -> Expression:
    if v not in expr.variables():
        return Expression()
    cached = cache.get(expr)
    if cached is not None:
        return cached
    out: dict[Monomial, Fraction] = {}
    derive = lambda e: _partial_even(e, v, cache)  # noqa: E731
    for m, c in expr._terms.items():
        for ev, p in m.even:
            if ev == v:
                mm = Monomial(m.odd, _lower_power(m.even, ev), m.atoms)
                out[mm] = out.get(mm, 0) + c * p
                break
        if m.atoms:
            _atom_terms(m, c, derive, out)
    result = Expression(out)
    cache[expr] = result
    return result


def partial(expr: Expression, v: JetVariable, side: str = "left") -> Expression:
    """Graded partial derivative with respect to the jet coordinate ``v``.

    For odd ``v``, ``side="left"`` moves ``v`` to the front of the odd
    factors before striking it, ``side="right"`` moves it to the back.
    For even ``v`` the side is irrelevant.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if not v.odd:
        return _partial_even(expr, v, {})
    out: dict[Monomial, Fraction] = {}
    for m, c in expr._terms.items():
        odd = m.odd
        if v not in odd:
            continue
        pos = odd.index(v)
        shifts = pos if side == "left" else len(odd) - 1 - pos
        mm = Monomial(odd[:pos] + odd[pos + 1:], m.even, m.atoms)
        out[mm] = out.get(mm, 0) + (-c if shifts & 1 else c)
    return Expression(out)


def _map_monomial(m: Monomial, c: Fraction, fn: Callable, map_arg: Callable, out: dict):
    r = _sort_odd([fn(v) for v in m.odd])
    if r is None:
        return
    sign, odd = r
    even: dict = {}
    for v, p in m.even:
        w = fn(v)
        even[w] = even.get(w, 0) + p
    atoms: dict = {}
    for a, p in m.atoms:
        a2 = FunctionAtom(a.kind, map_arg(a.arg))
        atoms[a2] = atoms.get(a2, 0) + p
    mm = Monomial(odd, frozenset(even.items()), frozenset(atoms.items()))
    out[mm] = out.get(mm, 0) + (c if sign > 0 else -c)


def map_variables(expr: Expression, fn: Callable[[JetVariable], JetVariable]) -> Expression:
    """Substitute every jet variable ``v`` by ``fn(v)`` (parity must be kept)."""
    cache: dict = {}

    def go(e: Expression) -> Expression:
        hit = cache.get(e)
        if hit is not None:
            return hit
        out: dict = {}
        for m, c in e._terms.items():
            _map_monomial(m, c, fn, go, out)
        res = Expression(out)
        cache[e] = res
        return res

    return go(expr)


def relabel(expr: Expression, mapping: Mapping[str, str]) -> Expression:
    """Rename base labels in every multi-index."""
    if not mapping or not (expr.labels() & set(mapping)):
        return expr
    return map_variables(expr, lambda v: JetVariable(v.odd, v.index, v.deriv.renamed(mapping)))


def restrict_diagonal(expr: Expression, target: str) -> Expression:
    """Collapse every multi-index onto the single label ``target``, keeping total orders."""
    labels = expr.labels()
    if not labels or labels == {target}:
        return expr
    return map_variables(expr, lambda v: JetVariable(v.odd, v.index, v.deriv.collapsed(target)))


@dataclass(frozen=True)
class Functional:
    """``∫ density d(base)``; the density must be homogeneous in odd degree."""

    density: Expression
    base: str = "x"

    def __post_init__(self):
        if not isinstance(self.density, Expression):
            object.__setattr__(self, "density", normalize(self.density))
        if not self.density.is_homogeneous():
            raise GradingError(
                f"density is not homogeneous in odd degree: {sorted(self.density.odd_degrees())}")

    @property
    def grading(self) -> int:
        """The common odd degree ``|F|`` (0 for the zero functional)."""
        degrees = self.density.odd_degrees()
        return next(iter(degrees)) if degrees else 0

    def __bool__(self):
        return bool(self.density)

    def __str__(self):
        from .dsl import render_functional
        return render_functional(self)
