"""Tiny expression language for per-edge potentials.

Grammar (loosest binding first)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | 'x' | NAME '(' expr ')' | '(' expr ')'

``x`` is the arc length measured from the edge tail.  Evaluation is
vectorised over numpy arrays.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, UnknownIdentifier

__all__ = ["Expression", "parse_expression", "FUNCTIONS"]


def _sech(x):
    return 1.0 / np.cosh(x)


FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "tanh": np.tanh,
    "sech": _sech,
    "abs": np.abs,
    "sqrt": np.sqrt,
}

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(.))")


@dataclass(frozen=True)
class _Tok:
    kind: str  # num, name, op, end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            break
        num, name, op = m.groups()
        start = m.start(m.lastindex) if m.lastindex else pos
        if num is not None:
            toks.append(_Tok("num", num, start))
        elif name is not None:
            toks.append(_Tok("name", name, start))
        elif op is not None:
            if op not in "+-*/^()":
                raise ParseError(f"unexpected character {op!r}", 1, start + 1)
            toks.append(_Tok("op", op, start))
        pos = m.end()
    toks.append(_Tok("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def fail(self, msg, tok=None):
        tok = tok or self.tok
        raise ParseError(msg, 1, tok.pos + 1)

    def eat(self, text):
        if self.tok.text != text or self.tok.kind != "op":
            self.fail(f"expected {text!r}")
        self.i += 1

    def parse(self):
        if self.tok.kind == "end":
            self.fail("empty expression")
        node = self.expr()
        if self.tok.kind != "end":
            self.fail(f"unexpected {self.tok.text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            node = ("bin", op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.i += 1
            node = ("bin", op, node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.i += 1
            operand = self.unary()
            return ("neg", operand) if op == "-" else operand
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.i += 1
            return ("bin", "^", base, self.unary())
        return base

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return ("num", float(tok.text))
        if tok.kind == "name":
            self.i += 1
            if tok.text == "x":
                return ("x",)
            if tok.text not in FUNCTIONS:
                raise UnknownIdentifier(f"unknown identifier {tok.text!r}", 1, tok.pos + 1)
            self.eat("(")
            arg = self.expr()
            self.eat(")")
            return ("call", tok.text, arg)
        if tok.kind == "op" and tok.text == "(":
            self.i += 1
            node = self.expr()
            self.eat(")")
            return node
        self.fail("unexpected end of input" if tok.kind == "end" else f"unexpected {tok.text!r}")


def _eval(node, x):
    kind = node[0]
    if kind == "num":
        return np.full(np.shape(x), node[1])
    if kind == "x":
        return np.asarray(x, dtype=float)
    if kind == "neg":
        return -_eval(node[1], x)
    if kind == "call":
        return FUNCTIONS[node[1]](_eval(node[2], x))
    _, op, a, b = node
    a, b = _eval(a, x), _eval(b, x)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    return a ** b


def _show(node) -> str:
    kind = node[0]
    if kind == "num":
        return repr(node[1])
    if kind == "x":
        return "x"
    if kind == "neg":
        return f"(-{_show(node[1])})"
    if kind == "call":
        return f"{node[1]}({_show(node[2])})"
    return f"({_show(node[2])} {node[1]} {_show(node[3])})"


class Expression:
    """Parsed expression; call it with an array of arc-length values."""

    def __init__(self, text: str, tree):
        self.text = text
        self.tree = tree

    def __call__(self, x):
        with np.errstate(all="ignore"):
            return _eval(self.tree, x)

    def __repr__(self):
        return f"Expression({self.text!r})"

    def canonical(self) -> str:
        """Fully parenthesised form, useful for checking precedence."""
        return _show(self.tree)

    @property
    def is_zero_literal(self) -> bool:
        return self.tree == ("num", 0.0)


def parse_expression(text: str) -> Expression:
    return Expression(text, _Parser(text).parse())
