import json

import pytest
from hypothesis import given

from varschouten import reference as ref
from varschouten.brackets import check_zimes
from varschouten.dsl import (
    SCHEMA_VERSION,
    ParseError,
    latex_expression,
    parse_expression,
    parse_functional,
    render,
    render_expression,
    render_functional,
)
from varschouten.expr import Expression, Functional, JetVariable, MultiIndex, cos, q, qd
from varschouten.geometric import geometric_bracket, lift
from strategies import functionals, mixed_expressions


class TestParse:
    def test_example_functionals(self):
        F = parse_functional(ref.F_SOURCE)
        assert F == Functional(qd() * q() * q("x", "x"), "x")
        assert F.grading == 1
        H = parse_functional(ref.H_SOURCE)
        assert H.density == qd("x", "x") * cos(q())

    def test_zero_functional(self):
        F = parse_functional("int 0 dx")
        assert not F.density and F.base == "x"

    def test_spaced_volume(self):
        assert parse_functional("int q_y d y") == parse_functional("int q_y dy")

    def test_labels(self):
        v = JetVariable(False, 1, MultiIndex.of(y1=2, z23=1))
        assert parse_expression("q_{y1 y1 z23}") == Expression.variable(v)
        assert parse_expression("q_y1y1z23") == Expression.variable(v)
        assert parse_expression("q_xy") == q("x", "y")

    def test_field_index(self):
        assert parse_expression("qd2_x") == qd("x", index=2)

    def test_precedence(self):
        assert parse_expression("-q^2 + 2*q*q/4") == -(q() ** 2) / 2
        assert parse_expression("(q + 1)^2") == q() ** 2 + 2 * q() + 1

    def test_comments_and_lines(self):
        assert parse_expression("q  # field\n + q_x") == q() + q("x")

    def test_atoms(self):
        assert parse_expression("exp(0)") == Expression.constant(1)


class TestParseErrors:
    @pytest.mark.parametrize("src", ["int exp(qd) dx", "int q + qd dx", "int q", "q dx", "int q_ dx"])
    def test_bad_functionals(self, src):
        with pytest.raises(ParseError):
            parse_functional(src)

    @pytest.mark.parametrize("src", ["q +", "q/q", "q^-1", "q^q", "tan(q)", "q $ q", "(q", "q/0",
                                     "q_{}", "q_{y1"])
    def test_bad_expressions(self, src):
        with pytest.raises(ParseError):
            parse_expression(src)

    def test_position(self):
        with pytest.raises(ParseError) as info:
            parse_expression("q +\n  $")
        assert (info.value.line, info.value.col) == (2, 3)

    def test_position_inside_source(self):
        src = "q * (q_x"
        with pytest.raises(ParseError) as info:
            parse_expression(src)
        assert info.value.line == 1 and 1 <= info.value.col <= len(src) + 1
        assert info.value.expected

    def test_odd_atom_message(self):
        with pytest.raises(ParseError, match="qd"):
            parse_functional("int exp(qd) dx")


class TestRender:
    def test_zero(self):
        assert render(Expression()) == "0"

    def test_text(self):
        assert render_expression(parse_expression("q_x*qd - 1/2*qd_x")) == "qd*q_x - 1/2*qd_x"
        assert render_functional(parse_functional(ref.G_SOURCE)) == "int qd_x*exp(q_x) dx"

    def test_roundtrip_fixture(self):
        G = parse_functional(ref.G_SOURCE)
        assert parse_functional(render(G)) == G

    def test_long_labels_use_braces(self):
        e = parse_expression("q_{y1 y1 z23}")
        assert render(e) == "q_y1y1z23"
        e = parse_expression("q_{alpha}")
        assert render(e) == "q_{alpha}"
        assert parse_expression(render(e)) == e

    def test_latex(self):
        assert latex_expression(parse_expression("qd_xx*cos(q)")) == "q^\\dagger_{xx} \\cos q"
        assert latex_expression(parse_expression("q_x^2*exp(q_x)")) == "q_{x}^{2} \\exp(q_{x})"
        assert render(parse_functional("int qd dx"), "latex") == "\\int q^\\dagger\\,\\mathrm{d}x"

    def test_structured(self):
        doc = json.loads(render(parse_expression("2*qd*q_x^2"), "structured", {"operation": "t"}))
        assert doc["schema"] == SCHEMA_VERSION
        assert doc["provenance"] == {"operation": "t"}
        (term,) = doc["value"]["terms"]
        assert term["coeff"] == "2"
        assert term["odd"] == [{"field": "qd", "index": 1, "deriv": {}}]
        assert term["even"] == [[{"field": "q", "index": 1, "deriv": {"x": 1}}, 2]]

    def test_structured_is_deterministic(self):
        F = parse_functional(ref.F_SOURCE)
        assert render(F, "structured") == render(parse_functional(render(F)), "structured")

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            render(Expression(), "html")

    def test_geometric_bracket_fixture(self):
        _, G, H = ref.functionals()
        text = render(geometric_bracket(lift(G), lift(H)))
        assert text.splitlines() == [
            "+1 * [-d/dy1](qd_x*exp(q_x))@x * [d^2/dz1^2](cos(q))@x",
            "-1 * [-d/dy1](exp(q_x))@x * (-qd_xx*sin(q))@x",
        ]

    def test_empty_composite(self):
        assert render(lift(Functional(Expression()))) == "0 (empty composite)"

    def test_report(self):
        F, _, H = ref.functionals()
        text = render(check_zimes(F, H))
        assert "rhs: 0" in text and "cohomologically equal: no" in text


@given(mixed_expressions(labels=("x", "y1", "z23")))
def test_parse_render_identity(e):
    assert parse_expression(render_expression(e)) == e


@given(functionals())
def test_functional_roundtrip(F):
    assert parse_functional(render_functional(F)) == F


@given(mixed_expressions())
def test_render_is_canonical(e):
    rebuilt = Expression(dict(reversed(list(e.items()))))
    assert render_expression(rebuilt) == render_expression(e)
