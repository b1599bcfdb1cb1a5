"""Text DSL for densities and functionals, plus text/structured/LaTeX renderers.

Grammar::

    functional := "int" expr "d" label
    expr       := ["+"|"-"] term (("+"|"-") term)*
    term       := unary (("*"|"/") unary)*        # divisors must be constants
    unary      := ("+"|"-") unary | power
    power      := primary ["^" integer]
    primary    := integer | jetvar | func "(" expr ")" | "(" expr ")"
    jetvar     := ("q"|"qd")[digits] ["_" labels]
    labels     := (letter digits*)+ | "{" label (" " label)* "}"
    func       := "exp" | "sin" | "cos"

``qd`` is the odd antifield ``q†``; repeating a label raises its order
(``qd_xx``, ``q_xy``, ``q_{y1 y1 z23}``).  ``#`` starts a comment.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from hashlib import sha256

from .expr import (
    ATOM_KINDS,
    Expression,
    ExpressionError,
    FunctionAtom,
    Functional,
    JetVariable,
    MultiIndex,
)

__all__ = [
    "ParseError",
    "parse_expression",
    "parse_functional",
    "render",
    "render_expression",
    "render_functional",
    "render_variable",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = "varschouten.structured/1"

_LABEL_RE = re.compile(r"[A-Za-z][A-Za-z0-9]*")
_SHORT_LABEL_RE = re.compile(r"[A-Za-z][0-9]*")
_JET_RE = re.compile(r"(qd|q)([0-9]*)")


class ParseError(ExpressionError):
    def __init__(self, message: str, line: int, col: int, expected=()):
        self.message = message
        self.line = line
        self.col = col
        self.expected = tuple(sorted(set(expected)))
        text = f"{line}:{col}: {message}"
        if self.expected:
            text += " (expected " + ", ".join(self.expected) + ")"
        super().__init__(text)


@dataclass
class _Token:
    kind: str  # num, name, jet, op, end
    text: str
    line: int
    col: int
    value: object = None


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(src)

    def err(msg, expected=()):
        raise ParseError(msg, line, col, expected)

    while i < n:
        ch = src[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and src[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            tokens.append(_Token("num", src[i:j], line, start_col, int(src[i:j])))
            col += j - i
            i = j
            continue
        if ch.isalpha():
            j = i
            while j < n and (src[j].isalnum()):
                j += 1
            word = src[i:j]
            m = _JET_RE.fullmatch(word)
            if m and j < n and src[j] == "_":
                # derivative part
                j += 1
                labels: list[str] = []
                if j < n and src[j] == "{":
                    close = src.find("}", j)
                    if close < 0:
                        col += j - i
                        err("unterminated label group", ["}"])
                    body = src[j + 1:close]
                    for lab in body.split():
                        if not _LABEL_RE.fullmatch(lab):
                            col += j - i
                            err(f"bad derivative label {lab!r}", ["label"])
                        labels.append(lab)
                    if not labels:
                        col += j - i
                        err("empty label group", ["label"])
                    j = close + 1
                else:
                    k = j
                    while k < n and src[k].isalpha():
                        k2 = k + 1
                        while k2 < n and src[k2].isdigit():
                            k2 += 1
                        labels.append(src[k:k2])
                        k = k2
                    if not labels:
                        col += j - i
                        err("missing derivative labels after '_'", ["label"])
                    j = k
                var = _jet(m, labels)
                tokens.append(_Token("jet", src[i:j], line, start_col, var))
            elif m:
                tokens.append(_Token("jet", word, line, start_col, _jet(m, [])))
            else:
                tokens.append(_Token("name", word, line, start_col))
            col += j - i
            i = j
            continue
        if ch in "+-*/^()":
            tokens.append(_Token("op", ch, line, start_col))
            i += 1
            col += 1
            continue
        err(f"unexpected character {ch!r}")
    tokens.append(_Token("end", "", line, col))
    return tokens


def _jet(m: re.Match, labels: list[str]) -> JetVariable:
    index = int(m.group(2)) if m.group(2) else 1
    if index < 1:
        raise ValueError("field index must be positive")
    return JetVariable(m.group(1) == "qd", index, MultiIndex((l, 1) for l in labels))


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.pos = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def fail(self, msg, expected=(), tok=None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col, expected)

    def advance(self) -> _Token:
        t = self.tok
        self.pos += 1
        return t

    def accept(self, text) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text):
        if not self.accept(text):
            self.fail(f"unexpected {self.tok.text or 'end of input'!r}", [repr(text)])

    _PRIMARY = ["integer", "jet variable", "exp", "sin", "cos", "'('"]

    def expr(self) -> Expression:
        sign = 1
        if self.accept("-"):
            sign = -1
        else:
            self.accept("+")
        out = self.term().scale(sign)
        while True:
            if self.accept("+"):
                out = out + self.term()
            elif self.accept("-"):
                out = out - self.term()
            else:
                return out

    def term(self) -> Expression:
        out = self.unary()
        while True:
            if self.accept("*"):
                out = out * self.unary()
            elif self.tok.kind == "op" and self.tok.text == "/":
                slash = self.advance()
                div = self.unary()
                if div.variables() or not div:
                    self.fail("divisor must be a nonzero rational constant", tok=slash)
                out = out / div.constant_term()
            else:
                return out

    def unary(self) -> Expression:
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Expression:
        base = self.primary()
        if self.accept("^"):
            if self.tok.kind != "num":
                self.fail("exponent must be a nonnegative integer", ["integer"])
            base = base ** self.advance().value
        return base

    def primary(self) -> Expression:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Expression.constant(t.value)
        if t.kind == "jet":
            self.advance()
            return Expression.variable(t.value)
        if t.kind == "name" and t.text in ATOM_KINDS:
            self.advance()
            self.expect("(")
            arg_tok = self.tok
            arg = self.expr()
            self.expect(")")
            try:
                return Expression.atom(t.text, arg)
            except ExpressionError as exc:
                self.fail(str(exc), tok=arg_tok)
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        self.fail(f"unexpected {t.text or 'end of input'!r}", self._PRIMARY)

    def finish(self):
        if self.tok.kind != "end":
            self.fail(f"unexpected {self.tok.text!r}", ["operator", "end of input"])


def parse_expression(src: str) -> Expression:
    p = _Parser(src)
    out = p.expr()
    p.finish()
    return out


def parse_functional(src: str) -> Functional:
    p = _Parser(src)
    t = p.tok
    if not (t.kind == "name" and t.text == "int"):
        p.fail("functional must start with 'int'", ["'int'"])
    p.advance()
    density = p.expr()
    t = p.tok
    base = None
    if t.kind == "name" and t.text.startswith("d") and len(t.text) > 1:
        base = t.text[1:]
        p.advance()
    elif t.kind == "name" and t.text == "d":
        p.advance()
        lt = p.tok
        if lt.kind in ("name", "jet"):
            base = lt.text
            p.advance()
        else:
            p.fail("missing integration label", ["label"])
    else:
        p.fail("missing volume element", ["'d<label>'", "operator"])
    if not _LABEL_RE.fullmatch(base):
        p.fail(f"bad integration label {base!r}", ["label"], tok=t)
    p.finish()
    try:
        return Functional(density, base)
    except ExpressionError as exc:
        raise ParseError(str(exc), 1, 1) from exc


# -- text rendering --------------------------------------------------------


def render_variable(v: JetVariable) -> str:
    name = ("qd" if v.odd else "q") + (str(v.index) if v.index != 1 else "")
    if not v.deriv:
        return name
    labels = [l for l, n in v.deriv for _ in range(n)]
    if all(_SHORT_LABEL_RE.fullmatch(l) for l in labels):
        return name + "_" + "".join(labels)
    return name + "_{" + " ".join(labels) + "}"


def _render_factors(m, fmt_var, fmt_atom, pow_fmt) -> list[str]:
    parts = [fmt_var(v) for v in m.odd]
    for v, p in sorted(m.even):
        parts.append(fmt_var(v) + (pow_fmt(p) if p > 1 else ""))
    for a, p in sorted(m.atoms, key=lambda ap: (ap[0].kind, ap[0].arg.sort_key())):
        parts.append(fmt_atom(a) + (pow_fmt(p) if p > 1 else ""))
    return parts


def _rational(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def render_expression(e: Expression) -> str:
    if not e:
        return "0"
    pieces = []
    for c, m in e.terms():
        factors = _render_factors(
            m, render_variable,
            lambda a: f"{a.kind}({render_expression(a.arg)})",
            lambda p: f"^{p}",
        )
        mag = abs(c)
        if not factors:
            body = _rational(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = _rational(mag) + "*" + "*".join(factors)
        neg = c < 0
        if not pieces:
            pieces.append(("-" if neg else "") + body)
        else:
            pieces.append((" - " if neg else " + ") + body)
    return "".join(pieces)


def render_functional(f: Functional) -> str:
    return f"int {render_expression(f.density)} d{f.base}"


# -- LaTeX -----------------------------------------------------------------


def _latex_var(v: JetVariable) -> str:
    name = "q^\\dagger" if v.odd else "q"
    if v.index != 1:
        name = f"q^{{\\dagger,{v.index}}}" if v.odd else f"q^{{{v.index}}}"
    if not v.deriv:
        return name
    labels = []
    for l, n in v.deriv:
        l = l if len(l) == 1 else f"{l[0]}_{{{l[1:]}}}"
        labels.extend([l] * n)
    return f"{name}_{{{''.join(labels)}}}"


def _latex_atom(a: FunctionAtom) -> str:
    arg = latex_expression(a.arg)
    (c, m), *rest = a.arg.terms()
    single = not rest and c == 1 and not m.atoms and sum(p for _, p in m.even) == 1
    if single and a.kind != "exp":
        return f"\\{a.kind} {arg}"
    return f"\\{a.kind}({arg})"


def _latex_rational(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"\\tfrac{{{c.numerator}}}{{{c.denominator}}}"


def latex_expression(e: Expression) -> str:
    if not e:
        return "0"
    pieces = []
    for c, m in e.terms():
        factors = _render_factors(m, _latex_var, _latex_atom, lambda p: f"^{{{p}}}")
        mag = abs(c)
        coef = "" if mag == 1 and factors else _latex_rational(mag)
        body = " ".join(([coef] if coef else []) + factors)
        if not pieces:
            pieces.append(("-" if c < 0 else "") + body)
        else:
            pieces.append((" - " if c < 0 else " + ") + body)
    return "".join(pieces)


# -- structured ------------------------------------------------------------


def variable_tree(v: JetVariable) -> dict:
    return {"field": "qd" if v.odd else "q", "index": v.index, "deriv": dict(v.deriv)}


def expression_tree(e: Expression) -> list:
    out = []
    for c, m in e.terms():
        out.append({
            "coeff": _rational(c),
            "odd": [variable_tree(v) for v in m.odd],
            "even": [[variable_tree(v), p] for v, p in sorted(m.even)],
            "atoms": [[{"kind": a.kind, "arg": expression_tree(a.arg)}, p]
                      for a, p in sorted(m.atoms, key=lambda ap: (ap[0].kind, ap[0].arg.sort_key()))],
        })
    return out


def content_hash(obj) -> str:
    return sha256(render(obj, "text").encode()).hexdigest()[:16]


def to_tree(obj) -> dict:
    if isinstance(obj, Expression):
        return {"kind": "expression", "terms": expression_tree(obj)}
    if isinstance(obj, Functional):
        return {"kind": "functional", "base": obj.base, "grading": obj.grading,
                "density": expression_tree(obj.density)}
    if hasattr(obj, "to_tree"):
        return obj.to_tree()
    raise TypeError(f"cannot render {type(obj).__name__}")


def render(obj, format: str = "text", provenance: dict | None = None) -> str:
    """Render an expression, functional, composite or report.

    ``structured`` output is JSON: ``{"schema": ..., "provenance": ...,
    "value": tree}`` where expressions are lists of terms
    ``{"coeff", "odd", "even", "atoms"}`` and jet variables are
    ``{"field", "index", "deriv"}``.
    """
    if format == "text":
        if isinstance(obj, Expression):
            return render_expression(obj)
        if isinstance(obj, Functional):
            return render_functional(obj)
        return obj.render_text()
    if format == "latex":
        if isinstance(obj, Expression):
            return latex_expression(obj)
        if isinstance(obj, Functional):
            return f"\\int {latex_expression(obj.density)}\\,\\mathrm{{d}}{obj.base}"
        return obj.render_latex()
    if format == "structured":
        doc = {"schema": SCHEMA_VERSION, "provenance": provenance or {}, "value": to_tree(obj)}
        return json.dumps(doc, indent=2, sort_keys=True)
    raise ValueError(f"unknown format {format!r}")
