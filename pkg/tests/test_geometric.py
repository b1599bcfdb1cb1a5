from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from varschouten import reference as ref
from varschouten.brackets import schouten_old
from varschouten.dsl import parse_expression as P
from varschouten.dsl import parse_functional as PF
from varschouten.expr import Expression, Functional
from varschouten.geometric import (
    CompositeExpression,
    CompositeTerm,
    DeferredFactor,
    DeferredRecord,
    ShiftLabel,
    canonicalize_composite,
    distinct_signatures,
    evaluate_terminal,
    geometric_bracket,
    jacobi_expansion,
    jacobiator_geometric,
    lift,
)
from strategies import functionals

ZERO = Functional(Expression(), "x")


def _composite(*terms):
    return CompositeExpression(tuple(CompositeTerm(Fraction(s), tuple(fs)) for s, fs in terms))


class TestLift:
    def test_zero(self):
        assert not lift(ZERO)

    def test_single_factor(self):
        F = ref.functionals()[0]
        (t,) = lift(F).terms
        (f,) = t.factors
        assert t.scalar == 1 and f.core == F.density and f.deferred == ()

    def test_grading(self):
        for F in (*ref.functionals(), PF("int qd*qd_x dx")):
            assert lift(F).grading == F.grading


class TestBracket:
    def test_example_pair(self):
        _, G, H = ref.functionals()
        first, second = geometric_bracket(lift(G), lift(H)).terms
        a, b = first.factors
        assert first.scalar == 1
        assert a.core == P("qd_x*exp(q_x)")
        assert a.deferred == (DeferredRecord(-1, 1, ShiftLabel("y1", 1)),)
        assert b.core == P("cos(q)")
        assert b.deferred == (DeferredRecord(1, 2, ShiftLabel("z1", 1)),)
        a, b = second.factors
        assert second.scalar == -1
        assert a.core == P("exp(q_x)") and a.deferred == (DeferredRecord(-1, 1, ShiftLabel("y1", 1)),)
        assert b.core == P("-qd_xx*sin(q)") and b.deferred == ()

    def test_empty_argument(self):
        F = ref.functionals()[0]
        assert not geometric_bracket(lift(F), lift(ZERO))
        assert not geometric_bracket(CompositeExpression(), lift(F))

    def test_nested_has_eight_terms(self):
        F, G, H = ref.functionals()
        lhs, first, second = jacobi_expansion(F, G, H)
        assert len(lhs) == 8
        rhs = first + second
        assert distinct_signatures(rhs) == 14
        assert len(canonicalize_composite(rhs)) == 8
        assert canonicalize_composite(lhs - rhs) == CompositeExpression()

    def test_fresh_levels(self):
        F, G, H = ref.functionals()
        inner = geometric_bracket(lift(G), lift(H))
        outer = geometric_bracket(lift(F), inner)
        assert inner.max_level() == 1 and outer.max_level() == 2
        names = {r.label.name for t in outer for f in t.factors for r in f.deferred}
        assert names <= {"y1", "z1", "y2", "z2"}

    def test_partials_dive_under_records(self):
        F, G, H = ref.functionals()
        outer = geometric_bracket(lift(F), geometric_bracket(lift(G), lift(H)))
        for t in outer:
            for f in t.factors:
                assert [r.label.level for r in f.deferred] == sorted(r.label.level for r in f.deferred)


class TestCanonicalize:
    def test_empty(self):
        assert canonicalize_composite(CompositeExpression()) == CompositeExpression()

    def test_label_erasure_cancels_pair(self):
        qd = P("qd")
        y = DeferredFactor(qd, "x", (DeferredRecord(1, 2, ShiftLabel("y1", 1)),))
        z = DeferredFactor(qd, "x", (DeferredRecord(1, 2, ShiftLabel("z12", 1)),))
        e = _composite((1, [y]), (-1, [z]))
        assert not canonicalize_composite(e)

    def test_scalar_from_core(self):
        f = DeferredFactor(P("2*q"), "x")
        g = DeferredFactor(P("q"), "x")
        assert not canonicalize_composite(_composite((1, [f]), (-2, [g])))

    def test_odd_reorder_sign(self):
        a, b = DeferredFactor(P("qd"), "x"), DeferredFactor(P("qd_x"), "x")
        assert not canonicalize_composite(_composite((1, [a, b]), (1, [b, a])))
        assert not canonicalize_composite(_composite((1, [a, a])))

    def test_idempotent(self):
        F, G, H = ref.functionals()
        lhs, _, _ = jacobi_expansion(F, G, H)
        once = canonicalize_composite(lhs)
        assert canonicalize_composite(once) == once


class TestJacobi:
    def test_example_triple(self):
        assert jacobiator_geometric(*ref.functionals()) == CompositeExpression()

    def test_zero_argument(self):
        F, G, _ = ref.functionals()
        assert not jacobiator_geometric(F, G, ZERO)
        assert not jacobiator_geometric(ZERO, F, G)


class TestTerminal:
    def test_empty(self):
        assert evaluate_terminal(CompositeExpression()) == Expression()

    def test_lift(self):
        F = ref.functionals()[2]
        assert evaluate_terminal(lift(F)) == F.density

    def test_example_pairs(self):
        F, G, H = ref.functionals()
        for a, b in [(F, G), (G, H), (F, H), (H, F)]:
            assert evaluate_terminal(geometric_bracket(lift(a), lift(b))) == schouten_old(a, b).density


def _raw_scalars_are_units(e):
    return all(abs(t.scalar) == 1 for t in e.terms)


@given(functionals(1), functionals(1))
def test_terminal_oracle(A, B):
    g = geometric_bracket(lift(A), lift(B))
    assert evaluate_terminal(g) == schouten_old(A, B).density


@given(functionals(1), functionals(1))
def test_coupling_scalars(A, B):
    A = Functional(A.density.scale(1 / A.density.terms()[0][0]), "x")
    assert _raw_scalars_are_units(geometric_bracket(lift(A), lift(PF("int qd*q_x*exp(q) dx"))))


@settings(max_examples=25)
@given(functionals(1, max_terms=2), functionals(1, max_terms=2), functionals(1, max_terms=2))
def test_random_jacobi_empty(F, G, H):
    assert not jacobiator_geometric(F, G, H)


@settings(max_examples=25)
@given(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2), st.data())
def test_mixed_degree_jacobi_empty(a, b, c, data):
    F, G, H = (data.draw(functionals(d, max_terms=1)) for d in (a, b, c))
    assert not jacobiator_geometric(F, G, H)


@settings(max_examples=50)
@given(st.integers(0, 2), st.integers(0, 2), st.data())
def test_shifted_antisymmetry(a, b, data):
    F, G = data.draw(functionals(a, max_terms=2)), data.draw(functionals(b, max_terms=2))
    eps = -1 if ((a - 1) * (b - 1)) & 1 else 1
    total = geometric_bracket(lift(F), lift(G)) + geometric_bracket(lift(G), lift(F)).scale(eps)
    assert not canonicalize_composite(total)
