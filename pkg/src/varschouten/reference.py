"""Worked examples: the three functionals and their reference bracket values.

Densities are DSL sources.  Where a value carries an overall factor, the
factor and the remaining sum are stored separately and multiplied on load.
"""

from __future__ import annotations

from functools import lru_cache

from .dsl import parse_expression, parse_functional
from .expr import Expression, Functional

F_SOURCE = "int qd*q*q_xx dx"
G_SOURCE = "int qd_x*exp(q_x) dx"
H_SOURCE = "int qd_xx*cos(q) dx"

# Same functionals on three different base labels.
F_MULTI_SOURCE = "int qd*q*q_xx dx"
G_MULTI_SOURCE = "int qd_y*exp(q_y) dy"
H_MULTI_SOURCE = "int qd_zz*cos(q) dz"

BRACKET_FG = "q_xx*exp(q_x)*(qd_x*q*q_xx - 2*qd_x*q_x - 2*qd*q_xx)"
BRACKET_GH = "exp(q_x)*(qd_x*q_x^2*q_xx*cos(q) + qd_xx*q_x^2*cos(q) + qd_x*q_xx^2*sin(q))"
BRACKET_FH = (
    "-(qd_xx*q*q_x^2*cos(q) + 2*qd_x*q_x^3*cos(q) + 2*qd*q_x^2*q_xx*cos(q)"
    " + 2*qd_x*q_x*q_xx*sin(q) + 2*qd*q_xx^2*sin(q))"
)

# Euler derivatives of f = qd*q*q_xx and h = qd_xx*cos(q).
EULER_F_Q = "2*qd*q_xx + 2*qd_x*q_x + qd_xx*q"
EULER_F_QD = "q*q_xx"
EULER_H_QD = "-q_xx*sin(q) - q_x^2*cos(q)"
EULER_H_Q = "-qd_xx*sin(q)"

# Laplacian of the bracket of F and H, up to exact terms.
ZIMES_FH_LHS = "-2*(q_xx^2*cos(q) - q_x^2*q_xx*sin(q))"

# Nested brackets are exp(q_x) times a sign times the stored sum.
NESTED_F_GH_SIGN = -1
NESTED_F_GH = (
    "qd_x*q*q_xx^4*sin(q) + 2*qd_x*q_x^4*q_xx*sin(q) "
    "+ 2*qd*q_x^3*q_xx^2*sin(q) + 4*qd_xx*q*q_xx^3*sin(q) "
    "+ 3*qd_x*q*q_xx^3*cos(q) + 2*qd_x*q_x*q_xx^3*sin(q) "
    "- 2*qd_x*q_x^2*q_xx^2*cos(q) - 2*qd*q_x*q_xx^3*cos(q) "
    "+ 10*qd*q_x^2*q_xx^2*sin(q) + 4*qd*q_xx^2*q_xxx*sin(q) "
    "+ 2*qd_xxx*q*q_xx^2*sin(q) - 4*qd_xx*q*q_xx^2*cos(q) "
    "+ qd_xx*q*q_x^4*cos(q) - qd_x*q*q_x^3*q_xx^2*sin(q) "
    "- qd_x*q*q_x^4*q_xx*cos(q) + 3*qd_x*q*q_x*q_xx^3*cos(q) "
    "- 6*qd_x*q*q_x^2*q_xx^2*sin(q) + 4*qd_x*q*q_xx^2*q_xxx*sin(q) "
    "+ qd_xx*q*q_x*q_xx^2*cos(q) + 6*qd_xx*q*q_x^2*q_xx*sin(q) "
    "+ 6*qd_xx*q*q_xx*q_xxx*sin(q) - 2*qd_xx*q*q_x*q_xxx*cos(q) "
    "+ 4*qd_x*q_x*q_xx*q_xxx*sin(q) - 4*qd*q_x*q_xx*q_xxx*cos(q) "
    "- 2*qd_xxx*q*q_x*q_xx*cos(q) + 2*qd_x*q*q_xx*q_xxxx*sin(q) "
    "+ 2*qd_x*q_x^5*cos(q) + 2*qd*q_xx^4*sin(q) - 4*qd*q_xx^3*cos(q) "
    "- 4*qd_x*q_x^2*q_xxx*cos(q) + 10*qd_x*q_x^3*q_xx*sin(q) "
    "+ 2*qd*q_x^4*q_xx*cos(q) - 4*qd_x*q_x*q_xx^2*cos(q) "
    "+ 4*qd_x*q*q_x*q_xx*q_xxx*cos(q)"
)
NESTED_FG_H_SIGN = -1
NESTED_FG_H = (
    "qd_x*q*q_x^2*q_xx^3*cos(q) + 3*qd_xx*q*q_x^2*q_xx^2*cos(q) "
    "+ 4*qd_xx*q*q_x^2*q_xxx*cos(q) + 2*qd_xxx*q*q_x^2*q_xx*cos(q) "
    "+ 2*qd_x*q*q_x^2*q_xxxx*cos(q) - 2*qd_xxx*q_x^3*cos(q) "
    "- 3*qd_x*q_xx^3*sin(q) - 2*qd_xx*q_x*q_xxx*sin(q) "
    "- 2*qd_xxx*q_x*q_xx*sin(q) - 4*qd*q_xx*q_xxxx*sin(q) "
    "+ 3*qd_x*q_x^3*q_xx^2*cos(q) - 2*qd*q_x^2*q_xx^3*cos(q) "
    "+ 4*qd_x*q_x^3*q_xxx*cos(q) + 2*qd_xx*q_x^3*q_xx*cos(q) "
    "- 4*qd*q_x^2*q_xxxx*cos(q) + qd_xx*q_x*q_xx^2*sin(q) "
    "+ qd_x*q*q_xx^4*sin(q) + 4*qd_xx*q*q_xx^3*sin(q) "
    "+ 3*qd_x*q_x*q_xx^3*sin(q) - 3*qd_x*q_x^2*q_xx^2*cos(q) "
    "- 8*qd*q_xx^2*q_xxx*sin(q) + 2*qd_xxx*q*q_xx^2*sin(q) "
    "+ 4*qd_x*q*q_xx^2*q_xxx*sin(q) + 6*qd_xx*q*q_xx*q_xxx*sin(q) "
    "+ 4*qd_x*q_x*q_xx*q_xxx*sin(q) + 2*qd_x*q*q_xx*q_xxxx*sin(q) "
    "- 2*qd*q_xx^4*sin(q) - 6*qd_xx*q_xx^2*sin(q) "
    "- 6*qd_xx*q_x^2*q_xx*cos(q) - 8*qd_x*q_x^2*q_xxx*cos(q) "
    "- 8*qd_x*q_xx*q_xxx*sin(q) - 8*qd*q_x^2*q_xx*q_xxx*cos(q) "
    "+ 4*qd_x*q*q_x^2*q_xx*q_xxx*cos(q)"
)
NESTED_G_FH_SIGN = 1
NESTED_G_FH = (
    "-qd_x*q*q_x^4*q_xx*cos(q) - qd_xx*q*q_x^4*cos(q) "
    "- 5*qd_x*q*q_x^2*q_xx^2*sin(q) + 2*qd_x*q*q_x*q_xx*q_xxx*cos(q) "
    "- 6*qd_xx*q*q_x^2*q_xx*sin(q) + 2*qd_x*q*q_xx^3*cos(q) "
    "- qd_x*q_x^2*q_xx^2*cos(q) + 2*qd_x*q_x^3*q_xx*sin(q) "
    "+ 12*qd*q_x^2*q_xx^2*sin(q) + 2*qd_xx*q*q_x*q_xxx*cos(q) "
    "- 2*qd_x*q_x*q_xx*q_xxx*sin(q) - 8*qd*q_x*q_xx*q_xxx*cos(q) "
    "+ 2*qd_xxx*q*q_x*q_xx*cos(q) + 4*qd_xx*q*q_xx^2*cos(q) "
    "- 6*qd_x*q_x*q_xx^2*cos(q) - 6*qd*q_xx^3*cos(q) "
    "- 2*qd_xx*q_x*q_xxx*sin(q) - 8*qd_x*q_xx*q_xxx*sin(q) "
    "- 2*qd_xxx*q_x*q_xx*sin(q) + 2*qd*q_x^4*q_xx*cos(q) "
    "- 4*qd*q_xx*q_xxxx*sin(q) - 6*qd_xx*q_xx^2*sin(q)"
)

# Single-base Jacobi residual is -D_x(exp(q_x) * RESIDUAL_PRIMITIVE_BRACE).
RESIDUAL_PRIMITIVE_BRACE = (
    "2*qd*q_xx^2*q_x^2*cos(q) - qd_x*q*q_xx^2*q_x^2*cos(q) "
    "- 2*qd_x*q*q_xx*q_x^3*sin(q) + 5*qd_x*q*q_xx^2*q_x*cos(q) "
    "- 2*qd_x*q_xx*q_x^3*cos(q) + 4*qd*q_xx*q_x^3*sin(q) "
    "- 2*qd_xx*q*q_xx*q_x^2*cos(q) + 4*qd*q_xxx*q_x^2*cos(q) "
    "+ 2*qd_x*q_x^4*sin(q) - 2*qd_x*q*q_x^2*q_xxx*cos(q) "
    "+ 4*qd*q_xx^3*sin(q) - 10*qd*q_xx^2*q_x*cos(q) - qd_x*q_xx^2*q_x*sin(q) "
    "+ 2*qd_xx*q_x^3*cos(q)"
)

# Multi-base residual before diagonal restriction: exp(q_y) times this sum.
MULTIBASE_RESIDUAL_BRACE = (
    "2*qd*q_xx*q_y*q_yy*q_zz*cos(q) - 8*qd*q_xx*q_y*q_z*q_yz*sin(q) "
    "+ qd_xx*q*q_y*q_yy*q_zz*cos(q) - 4*qd_xx*q*q_y*q_z*q_yz*sin(q) "
    "+ 2*qd_x*q_x*q_y*q_yy*q_zz*cos(q) - 8*qd_x*q_x*q_y*q_z*q_yz*sin(q) "
    "+ qd_y*q*q_xx*q_y^2*q_z^2*cos(q) + qd_y*q*q_xx*q_yy*q_z^2*sin(q) "
    "- qd_y*q*q_xx*q_yy*q_yz^2*sin(q) + qd_y*q*q_xx*q_y^2*q_zz*sin(q) "
    "+ qd_yy*q*q_xx*q_y*q_z^2*sin(q) - 2*qd_yz*q*q_xx*q_yy*q_yz*sin(q) "
    "- 2*qd_y*q*q_xx*q_yy*q_yzz*sin(q) + qd_zz*q*q_xx*q_y*q_yy*cos(q) "
    "- qd_y*q*q_xx*q_yy*q_zz*cos(q) - 2*qd_y*q*q_xx*q_yz*q_yyz*sin(q) "
    "- qd_yy*q*q_xx*q_y*q_zz*cos(q) - 2*qd_y*q*q_xx*q_y*q_yzz*cos(q) "
    "- 2*qd_yy*q*q_xx*q_yz*q_z*cos(q) - 2*qd_y*q*q_xx*q_yyz*q_z*cos(q) "
    "+ qd_y*q*q_xy^2*q_yy*q_z^2*cos(q) + qd_y*q_xx*q_y*q_yy*q_z^2*cos(q) "
    "+ 2*qd_y*q_x*q_xy*q_yy*q_z^2*cos(q) + qd_y*q*q_xy^2*q_yy*q_zz*sin(q) "
    "+ 2*qd_y*q*q_xxy*q_yy*q_z^2*cos(q) + 2*qd_xy*q*q_xy*q_yy*q_z^2*cos(q) "
    "+ 2*qd_y*q*q_xy*q_xyy*q_z^2*cos(q) + qd_y*q_xx*q_y*q_yy*q_zz*sin(q) "
    "+ 2*qd_y*q_x*q_xy*q_yy*q_zz*sin(q) + 2*qd_y*q*q_xxy*q_yy*q_zz*sin(q) "
    "+ 2*qd_xy*q*q_xy*q_yy*q_zz*sin(q) + 2*qd_y*q*q_xy*q_xyy*q_zz*sin(q) "
    "- 8*qd*q_x*q_yy*q_xz*q_z*sin(q) + qd_y*q*q_x^2*q_yy*q_z^2*cos(q) "
    "+ qd_y*q*q_x^2*q_yy*q_zz*sin(q) - 2*qd_y*q*q_x*q_yy*q_xzz*cos(q) "
    "+ 4*qd_yy*q*q_x*q_xz*q_z*sin(q) - 2*qd*q_xx*q_y*q_yy*q_z^2*sin(q) "
    "- qd_xx*q*q_y*q_yy*q_z^2*sin(q) - 2*qd_x*q_x*q_y*q_yy*q_z^2*sin(q) "
    "- 4*qd_xy*q_xy*q_zz*sin(q) - 2*qd_zz*q_x^2*q_yy*cos(q) "
    "+ 4*qd*q_yy*q_xz^2*cos(q) + 4*qd_x*q_yy*q_xzz*sin(q) "
    "+ 2*qd_xxz*q_yy*q_z*sin(q) + 4*qd_xz*q_yy*q_xz*sin(q) "
    "+ 4*qd_z*q_yy*q_xxz*sin(q) + 4*qd*q_yy*q_xxzz*sin(q) "
    "- 2*qd_zz*q_xxy*q_y*sin(q) + qd_yy*q_xx*q_z^2*cos(q) "
    "- 2*qd_yy*q*q_xz^2*cos(q) + 2*qd_yy*q_xxz*q_z*sin(q) "
    "+ 4*qd*q_xx*q_yz^2*cos(q) + 2*qd_xx*q*q_yz^2*cos(q) "
    "+ 4*qd_x*q_x*q_yz^2*cos(q) - qd_xx*q_yy*q_z^2*cos(q) "
    "- 4*qd_x*q_xyy*q_z^2*cos(q) - 2*qd_xxy*q_y*q_z^2*cos(q) "
    "- 4*qd_y*q_xxy*q_z^2*cos(q) - 4*qd*q_xxyy*q_z^2*cos(q) "
    "- 4*qd_xy*q_xy*q_z^2*cos(q) - 4*qd_x*q_xyy*q_zz*sin(q) "
    "- 2*qd_xxy*q_y*q_zz*sin(q) - 4*qd_y*q_xxy*q_zz*sin(q) "
    "- 4*qd*q_xxyy*q_zz*sin(q) + 4*qd*q_xxz*q_yy*q_z*cos(q) "
    "+ qd_zz*q*q_xy^2*q_yy*sin(q) - qd_zz*q_xx*q_y*q_yy*sin(q) "
    "+ 2*qd_zz*q*q_xy*q_xyy*sin(q) + qd_yy*q*q_x^2*q_z^2*cos(q) "
    "+ qd_yy*q*q_x^2*q_zz*sin(q) - 2*qd_y*q*q_yy*q_xz^2*cos(q) "
    "- 2*qd_yy*q*q_x*q_xzz*cos(q) + 2*qd_y*q_xxz*q_yy*q_z*sin(q) "
    "- 4*qd_x*q_x*q_yz*q_yyz*sin(q) + 4*qd_x*q_x*q_y*q_yzz*cos(q) "
    "- qd_zz*q*q_xx*q_y^2*sin(q) - qd_yy*q*q_xx*q_yz^2*sin(q) "
    "- 2*qd_y*q*q_xx*q_yz^2*cos(q) - 2*qd_yyz*q*q_xx*q_yz*sin(q) "
    "- 2*qd_yy*q*q_xx*q_yzz*sin(q) - 2*qd_yz*q*q_xx*q_yyz*sin(q) "
    "- 2*qd_y*q*q_xx*q_yyzz*sin(q) + 2*qd_yzz*q*q_xx*q_y*cos(q) "
    "- 2*qd*q_yy*q_xy^2*q_z^2*cos(q) + qd_yy*q*q_xy^2*q_z^2*cos(q) "
    "+ 2*qd_y*q_xx*q_yy*q_z^2*cos(q) + qd_yy*q_xx*q_y*q_z^2*cos(q) "
    "- qd_xx*q_y*q_yy*q_z^2*cos(q) - 4*qd_x*q_xy*q_yy*q_z^2*cos(q) "
    "+ 2*qd_yy*q_xy*q_x*q_z^2*cos(q) + 2*qd_y*q_x*q_xyy*q_z^2*cos(q) "
    "- 2*qd*q_xy^2*q_yy*q_zz*sin(q) - 4*qd*q_xxy*q_yy*q_z^2*cos(q) "
    "+ qd_yy*q*q_xy^2*q_zz*sin(q) + 2*qd_y*q_xxy*q_y*q_z^2*cos(q) "
    "+ 2*qd_y*q_x*q_xyy*q_zz*sin(q) - 4*qd*q_xxy*q_yy*q_zz*sin(q) "
    "+ 2*qd_y*q_xxy*q_y*q_zz*sin(q) + 2*qd_yy*q*q_xxy*q_zz*sin(q) "
    "+ 2*qd_y*q*q_xxyy*q_zz*sin(q) + 2*qd_xyy*q*q_xy*q_zz*sin(q) "
    "+ 2*qd_xy*q*q_xyy*q_zz*sin(q) - 4*qd*q_xy*q_xyy*q_zz*sin(q) "
    "- 2*qd*q_x^2*q_yy*q_z^2*cos(q) - 2*qd*q_xx*q_yy*q_z^2*sin(q) "
    "+ 2*qd_yy*q*q_xxy*q_z^2*cos(q) + 2*qd_y*q*q_xxyy*q_z^2*cos(q) "
    "+ 2*qd_xyy*q*q_xy*q_z^2*cos(q) + 2*qd_xy*q*q_xyy*q_z^2*cos(q) "
    "- 4*qd*q_xy*q_xyy*q_z^2*cos(q) + qd_y*q_xx*q_yy*q_zz*sin(q) "
    "+ qd_yy*q_xx*q_y*q_zz*sin(q) - qd_xx*q_yy*q_y*q_zz*sin(q) "
    "- 4*qd_x*q_xy*q_yy*q_zz*sin(q) + 2*qd_yy*q_x*q_xy*q_zz*sin(q) "
    "- 2*qd*q_xx*q_y^2*q_z^2*cos(q) - qd_xx*q*q_y^2*q_z^2*cos(q) "
    "- 2*qd_x*q_x*q_y^2*q_z^2*cos(q) - 2*qd*q_xx*q_yy*q_yz^2*sin(q) "
    "- 2*qd*q_xx*q_y^2*q_zz*sin(q) - qd_xx*q*q_yy*q_yz^2*sin(q) "
    "- qd_xx*q*q_y^2*q_zz*sin(q) - 2*qd_x*q_x*q_yy*q_yz^2*sin(q) "
    "- 2*qd_x*q_x*q_y^2*q_zz*sin(q) - 4*qd*q_xx*q_yz*q_yyz*sin(q) "
    "+ 4*qd*q_xx*q_y*q_yzz*cos(q) - 2*qd_xx*q*q_yz*q_yyz*sin(q) "
    "+ 2*qd_xx*q*q_y*q_yzz*cos(q) - 2*qd_x*q_x*q_yy*q_z^2*sin(q) "
    "- 2*qd*q_x^2*q_yy*q_zz*sin(q) + qd_zz*q*q_x^2*q_yy*sin(q) "
    "+ 2*qd*q_xx*q_yy*q_zz*cos(q) + 2*qd_x*q_x*q_yy*q_zz*cos(q) "
    "+ 4*qd_x*q_xz*q_yy*q_z*cos(q) + 4*qd*q_x*q_yy*q_xzz*cos(q) "
    "- 2*qd_xzz*q*q_x*q_yy*cos(q) + qd_y*q*q_xx*q_y*q_yy*q_z^2*sin(q) "
    "- qd_y*q*q_xx*q_y*q_yy*q_zz*cos(q) - 2*qd_y*q*q_xx*q_yy*q_yz*q_z*cos(q) "
    "+ 4*qd_y*q*q_xx*q_y*q_yz*q_z*sin(q) + 4*qd_y*q*q_x*q_xz*q_yy*q_z*sin(q)"
)


def functionals() -> tuple[Functional, Functional, Functional]:
    return tuple(parse_functional(s) for s in (F_SOURCE, G_SOURCE, H_SOURCE))


def multibase_functionals() -> tuple[Functional, Functional, Functional]:
    return tuple(parse_functional(s) for s in (F_MULTI_SOURCE, G_MULTI_SOURCE, H_MULTI_SOURCE))


@lru_cache(maxsize=None)
def expr(source: str) -> Expression:
    return parse_expression(source)


def nested_values() -> dict[str, Expression]:
    e = expr("exp(q_x)")
    return {
        "F,[G,H]": (e * expr(NESTED_F_GH)).scale(NESTED_F_GH_SIGN),
        "[F,G],H": (e * expr(NESTED_FG_H)).scale(NESTED_FG_H_SIGN),
        "G,[F,H]": (e * expr(NESTED_G_FH)).scale(NESTED_G_FH_SIGN),
    }


def residual_primitive() -> Expression:
    return expr("exp(q_x)") * expr(RESIDUAL_PRIMITIVE_BRACE)


def multibase_residual() -> Expression:
    return expr("exp(q_y)") * expr(MULTIBASE_RESIDUAL_BRACE)
