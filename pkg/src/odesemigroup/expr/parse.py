"""Text grammar for expressions: a Pratt parser and a matching renderer.

Precedence, loosest to tightest: ``+ -``, ``* /``, unary ``-``, ``^``
(right-associative).  Dependent symbols are written ``y``, ``y'`` and
``y''``; auxiliary functions of x are ``@name`` with the same prime
suffixes.  ``integral(f, a)`` denotes the antiderivative of ``f`` that
vanishes at the numeric anchor ``a``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .nodes import (
    FUNCTIONS,
    Add,
    Aux,
    Const,
    Dep,
    Div,
    Expr,
    Float,
    Func,
    Integral,
    Mul,
    Neg,
    Parameter,
    Pow,
    Var,
    add,
    aux,
    div,
    func,
    integral,
    is_number,
    mul,
    neg,
    power,
)


class ParseError(ValueError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


@dataclass(frozen=True)
class Token:
    kind: str  # num | float | ident | dep | aux | op | end
    text: str
    pos: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<float>(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?|\d+[eE][+-]?\d+)
  | (?P<num>\d+)
  | (?P<aux>@[A-Za-z_]\w*(?:'|′)*)
  | (?P<ident>[A-Za-z_]\w*(?:'|′)*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group().replace("′", "'"), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


_INFIX = {"+": (10, 11), "-": (10, 11), "*": (20, 21), "/": (20, 21), "^": (40, 39)}
_PREFIX_BP = 30


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            found = tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", tok.pos, self.text)
        return tok

    def expression(self, min_bp: int = 0) -> Expr:
        lhs = self.prefix()
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _INFIX:
                break
            lbp, rbp = _INFIX[tok.text]
            if lbp < min_bp:
                break
            self.next()
            rhs = self.expression(rbp)
            lhs = _apply(tok.text, lhs, rhs)
        return lhs

    def prefix(self) -> Expr:
        tok = self.next()
        if tok.kind == "op" and tok.text == "-":
            return neg(self.expression(_PREFIX_BP))
        if tok.kind == "op" and tok.text == "+":
            return self.expression(_PREFIX_BP)
        if tok.kind == "op" and tok.text == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        if tok.kind == "num":
            return Const(Fraction(int(tok.text)))
        if tok.kind == "float":
            try:
                return Float(float(tok.text))
            except ValueError as exc:
                raise ParseError(str(exc), tok.pos, self.text) from None
        if tok.kind == "aux":
            name = tok.text[1:].rstrip("'")
            return aux(name, len(tok.text) - 1 - len(name))
        if tok.kind == "ident":
            return self.identifier(tok)
        found = tok.text or "end of input"
        raise ParseError(f"unexpected {found!r}", tok.pos, self.text)

    def identifier(self, tok: Token) -> Expr:
        name = tok.text.rstrip("'")
        primes = len(tok.text) - len(name)
        if primes:
            if name != "y" or primes > 2:
                raise ParseError(f"unknown symbol {tok.text!r}", tok.pos, self.text)
            return Dep(primes)
        if self.peek().text == "(":
            self.next()
            if name in FUNCTIONS:
                arg = self.expression()
                self.expect(")")
                return func(name, arg)
            if name == "integral":
                integrand = self.expression()
                self.expect(",")
                anchor_tok = self.peek()
                anchor = self.expression()
                self.expect(")")
                if not is_number(anchor):
                    raise ParseError("integral anchor must be a number", anchor_tok.pos, self.text)
                return integral(integrand, anchor)
            raise ParseError(f"unknown function {name!r}", tok.pos, self.text)
        if name == "x":
            return Var()
        if name == "y":
            return Dep(0)
        if name in FUNCTIONS or name == "integral":
            raise ParseError(f"function {name!r} needs an argument", tok.pos, self.text)
        return Parameter(name)


def _apply(op: str, a: Expr, b: Expr) -> Expr:
    if op == "+":
        return add(a, b)
    if op == "-":
        return add(a, neg(b))
    if op == "*":
        return mul(a, b)
    if op == "/":
        return div(a, b)
    return power(a, b)


def parse(text: str) -> Expr:
    """Parse ``text`` into a normalized expression tree."""
    p = _Parser(text)
    e = p.expression()
    tok = p.peek()
    if tok.kind != "end":
        raise ParseError(f"unexpected {tok.text!r}", tok.pos, text)
    return e


# ---------------------------------------------------------------------------
# rendering

_ADD, _MUL, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5


def _prec(e: Expr) -> int:
    if isinstance(e, Add):
        return _ADD
    if isinstance(e, (Mul, Div)):
        return _MUL
    if isinstance(e, Neg):
        return _UNARY
    if isinstance(e, Pow):
        return _POW
    if isinstance(e, Const):
        if e.value < 0:
            return _MUL if e.value.denominator != 1 else _UNARY
        return _MUL if e.value.denominator != 1 else _ATOM
    if isinstance(e, Float):
        return _UNARY if e.value < 0 or repr(e.value).startswith("-") else _ATOM
    return _ATOM


def _wrap(e: Expr, need: int) -> str:
    s = render(e)
    return f"({s})" if _prec(e) < need else s


def _split_sign(t: Expr) -> tuple[str, Expr]:
    if isinstance(t, Neg):
        return "-", t.arg
    if is_number(t) and t.value < 0:
        return "-", neg(t)
    if isinstance(t, Mul) and is_number(t.factors[0]) and t.factors[0].value < 0:
        return "-", neg(t)
    return "+", t


def render(e: Expr) -> str:
    """Render in the parser's grammar; ``parse(render(e)) == e``."""
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, Float):
        return repr(e.value)
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Dep):
        return "y" + "'" * e.order
    if isinstance(e, Parameter):
        return e.name
    if isinstance(e, Aux):
        return "@" + e.name + "'" * e.order
    if isinstance(e, Add):
        parts = [_wrap(e.terms[0], _ADD + 1) if isinstance(e.terms[0], Add) else render(e.terms[0])]
        for t in e.terms[1:]:
            sign, body = _split_sign(t)
            parts.append(f" {sign} {_wrap(body, _MUL)}")
        return "".join(parts)
    if isinstance(e, Mul):
        first, rest = e.factors[0], e.factors[1:]
        if len(rest) == 1 and is_number(first) and isinstance(rest[0], Div):
            q = rest[0]
            head = _wrap(first, _MUL)
            if q.num != Const(1):
                head += "*" + _wrap(q.num, _UNARY)
            return f"{head}/{_wrap(q.den, _UNARY)}"
        out = [_wrap(first, _MUL)]
        out += [_wrap(f, _UNARY) for f in rest]
        return "*".join(out)
    if isinstance(e, Div):
        return f"{_wrap(e.num, _MUL)}/{_wrap(e.den, _UNARY)}"
    if isinstance(e, Neg):
        return "-" + _wrap(e.arg, _MUL)
    if isinstance(e, Pow):
        return f"{_wrap(e.base, _ATOM)}^{_wrap(e.exponent, _POW)}"
    if isinstance(e, Func):
        return f"{e.name}({render(e.arg)})"
    if isinstance(e, Integral):
        return f"integral({render(e.integrand)}, {render(e.anchor)})"
    raise TypeError(f"cannot render {e!r}")
