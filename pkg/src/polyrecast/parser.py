"""Recursive-descent parser for expressions and predicates.

Concrete syntax:

    identifiers   [a-zA-Z_][a-zA-Z0-9_]*
    numbers       decimal (1, 0.5, 12.25) -- converted to exact rationals
    operators     + - * / ^   with the usual precedence; ^ binds tightest
                  and takes a rational literal (or parenthesized rational)
                  as exponent
    functions     exp(f), ln(f), sin(f), cos(f), sqrt(f); e^(f) is sugar
                  for exp(f)
    predicates    comparisons <= < = != >= > over expressions, combined
                  with & | ! and parentheses; `true` and `false`

Unary minus is represented as multiplication by -1.  sqrt(f) is sugar for
f^(1/2).  Decimal constants become exact fractions (0.5 -> 1/2).
"""

from __future__ import annotations

import re
from fractions import Fraction

from . import expr as ex
from .errors import ParseError
from .predicates import (
    Atom,
    FALSE,
    Predicate,
    TRUE,
    conj,
    disj,
    neg_pred,
)

_TOKEN_RE = re.compile(
    r"""
    (?P<num>\d+\.\d+|\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|!=|->|:=|[-+*/^()<>=&|!,\[\]])
  | (?P<ws>\s+)
""",
    re.VERBOSE,
)

_FUNCTIONS = {"exp", "ln", "sin", "cos", "sqrt"}


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
            if m.lastgroup != "ws":
                self.toks.append((m.lastgroup, m.group(), pos))
            pos = m.end()
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        if self.i < len(self.toks):
            return self.toks[self.i]
        return ("eof", "", len(self.text))

    def next(self) -> tuple[str, str, int]:
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, text, pos = self.next()
        if text != value:
            raise ParseError(f"expected {value!r}, found {text or 'end of input'!r}", pos, self.text)

    def error(self, message: str) -> ParseError:
        _, _, pos = self.peek()
        return ParseError(message, pos, self.text)


# precedence levels, matching expr.to_string
_ADD, _MUL, _NEG, _POW = 1, 2, 3, 4


def _parse_expr(ts: _Tokens, min_level: int = _ADD) -> ex.Expr:
    node = _parse_prefix(ts)
    while True:
        kind, text, _ = ts.peek()
        if kind != "op":
            return node
        if text in "+-" and min_level <= _ADD:
            ts.next()
            rhs = _parse_expr(ts, _MUL)
            node = ex.add(node, rhs) if text == "+" else ex.sub(node, rhs)
        elif text in "*/" and min_level <= _MUL:
            ts.next()
            rhs = _parse_expr(ts, _NEG)
            node = ex.mul(node, rhs) if text == "*" else ex.div(node, rhs)
        else:
            return node


def _parse_prefix(ts: _Tokens) -> ex.Expr:
    kind, text, _ = ts.peek()
    if kind == "op" and text == "-":
        ts.next()
        return ex.neg(_parse_expr(ts, _NEG))
    if kind == "op" and text == "+":
        ts.next()
        return _parse_expr(ts, _NEG)
    return _parse_postfix(ts)


def _parse_postfix(ts: _Tokens) -> ex.Expr:
    node = _parse_primary(ts)
    kind, text, _ = ts.peek()
    if kind == "op" and text == "^":
        ts.next()
        if isinstance(node, ex.Var) and node.name == "e":
            # e^(...) is the exponential function, not a power
            arg = _parse_exponent_operand(ts)
            return ex.exp(arg)
        exponent = _parse_rational_exponent(ts)
        node = ex.pow_(node, exponent)
        kind, text, _ = ts.peek()
        if kind == "op" and text == "^":
            raise ts.error("chained ^ needs parentheses")
    return node


def _parse_exponent_operand(ts: _Tokens) -> ex.Expr:
    kind, text, _ = ts.peek()
    if kind == "op" and text == "(":
        ts.next()
        inner = _parse_expr(ts)
        ts.expect(")")
        return inner
    if kind == "op" and text == "-":
        ts.next()
        return ex.neg(_parse_exponent_operand(ts))
    return _parse_primary(ts)


def _parse_rational_exponent(ts: _Tokens) -> Fraction:
    kind, text, _ = ts.peek()
    if kind == "op" and text == "(":
        ts.next()
        value = _parse_signed_rational(ts, allow_div=True)
        ts.expect(")")
        return value
    return _parse_signed_rational(ts, allow_div=False)


def _parse_signed_rational(ts: _Tokens, allow_div: bool) -> Fraction:
    sign = 1
    kind, text, _ = ts.peek()
    if kind == "op" and text == "-":
        ts.next()
        sign = -1
    kind, text, pos = ts.next()
    if kind != "num":
        raise ParseError("exponent must be a rational constant", pos, ts.text)
    value = Fraction(text)
    kind, text, _ = ts.peek()
    if allow_div and kind == "op" and text == "/":
        # x^(1/2); a slash after a bare exponent (x^1/2) stays a division
        ts.next()
        kind, text, pos = ts.next()
        if kind != "num":
            raise ParseError("exponent denominator must be a number", pos, ts.text)
        value = value / Fraction(text)
    return sign * value


def _parse_primary(ts: _Tokens) -> ex.Expr:
    kind, text, pos = ts.next()
    if kind == "num":
        return ex.Constant(Fraction(text))
    if kind == "name":
        if text in _FUNCTIONS:
            ts.expect("(")
            arg = _parse_expr(ts)
            ts.expect(")")
            return {
                "exp": ex.exp,
                "ln": ex.ln,
                "sin": ex.sin,
                "cos": ex.cos,
                "sqrt": ex.sqrt,
            }[text](arg)
        nxt_kind, nxt_text, _ = ts.peek()
        if nxt_kind == "op" and nxt_text == "(":
            raise ParseError(f"unknown function {text!r}", pos, ts.text)
        return ex.Var(text)
    if kind == "op" and text == "(":
        inner = _parse_expr(ts)
        ts.expect(")")
        return inner
    raise ParseError(f"unexpected {text or 'end of input'!r}", pos, ts.text)


def parse(text: str) -> ex.Expr:
    """Parse an expression; raises ParseError with a position on bad input."""
    ts = _Tokens(text)
    node = _parse_expr(ts)
    kind, tok, pos = ts.peek()
    if kind != "eof":
        raise ParseError(f"trailing input {tok!r}", pos, text)
    return node


# --- predicates -------------------------------------------------------------

_REL_TOKENS = {"<=", "<", ">=", ">", "=", "!="}


def _parse_pred_primary(ts: _Tokens) -> Predicate:
    kind, text, _ = ts.peek()
    if kind == "op" and text == "!":
        ts.next()
        return neg_pred(_parse_pred_primary(ts))
    if kind == "name" and text == "true":
        ts.next()
        return TRUE
    if kind == "name" and text == "false":
        ts.next()
        return FALSE
    if kind == "op" and text == "(":
        # could be a parenthesized predicate or a parenthesized expression
        mark = ts.i
        ts.next()
        try:
            inner = _parse_pred_or(ts)
            ts.expect(")")
            kind, text, _ = ts.peek()
            if kind == "op" and text in _REL_TOKENS:
                raise ParseError("", 0, ts.text)  # actually an expression; retry
            return inner
        except ParseError:
            ts.i = mark
    lhs = _parse_expr(ts)
    kind, text, _ = ts.peek()
    if kind != "op" or text not in _REL_TOKENS:
        raise ts.error("expected a comparison operator")
    ts.next()
    rhs = _parse_expr(ts)
    return Atom.compare(lhs, text, rhs)


def _parse_pred_and(ts: _Tokens) -> Predicate:
    node = _parse_pred_primary(ts)
    while True:
        kind, text, _ = ts.peek()
        if kind == "op" and text == "&":
            ts.next()
            node = conj(node, _parse_pred_primary(ts))
        else:
            return node


def _parse_pred_or(ts: _Tokens) -> Predicate:
    node = _parse_pred_and(ts)
    while True:
        kind, text, _ = ts.peek()
        if kind == "op" and text == "|":
            ts.next()
            node = disj(node, _parse_pred_and(ts))
        else:
            return node


def parse_predicate(text: str) -> Predicate:
    ts = _Tokens(text)
    node = _parse_pred_or(ts)
    kind, tok, pos = ts.peek()
    if kind != "eof":
        raise ParseError(f"trailing input {tok!r}", pos, text)
    return node
