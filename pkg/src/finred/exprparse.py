"""Tiny expression language for scalar energy functions of q1..qn.

Grammar (infix, case-sensitive):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('+' | '-') factor | power
    power  := atom ('^' factor)?          # right-associative
    atom   := NUMBER | VARIABLE | FUNC '(' expr ')' | '(' expr ')'

Variables are ``q1`` .. ``qn``; functions are sin, cos, tanh, exp.
Parsing produces a small AST that can be pretty-printed, differentiated
exactly (via sympy), and analysed for unbounded curvature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import sympy as sp

FUNCTIONS = ("sin", "cos", "tanh", "exp")

_SYMPY_FUNCS = {"sin": sp.sin, "cos": sp.cos, "tanh": sp.tanh, "exp": sp.exp}


class ExpressionError(ValueError):
    """Parse or validation failure, carrying the 0-based source position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based; displays as q{index+1}


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num', 'name', 'op', 'end'
    text: str
    pos: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*/^()":
            tokens.append(_Token("op", ch, i))
            i += 1
            continue
        if ch.isdigit() or ch == ".":
            j = i
            seen_exp = False
            while j < n and (src[j].isdigit() or src[j] == "." or
                             (src[j] in "eE" and not seen_exp) or
                             (src[j] in "+-" and j > i and src[j - 1] in "eE")):
                if src[j] in "eE":
                    seen_exp = True
                j += 1
            text = src[i:j]
            try:
                float(text)
            except ValueError:
                raise ExpressionError(f"malformed number '{text}'", i)
            tokens.append(_Token("num", text, i))
            i = j
            continue
        if ch.isalpha():
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(_Token("name", src[i:j], i))
            i = j
            continue
        raise ExpressionError(f"unexpected character '{ch}'", i)
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, src: str, dim: int):
        self.tokens = _tokenize(src)
        self.k = 0
        self.dim = dim

    def peek(self) -> _Token:
        return self.tokens[self.k]

    def advance(self) -> _Token:
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect_op(self, text: str) -> None:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise ExpressionError(f"expected '{text}', found '{tok.text or 'end of input'}'", tok.pos)
        self.advance()

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionError(f"unexpected trailing input '{tok.text}'", tok.pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        tok = self.peek()
        if tok.kind == "op" and tok.text in "+-":
            self.advance()
            arg = self.factor()
            return arg if tok.text == "+" else Neg(arg)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> Node:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "name":
            if tok.text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(tok.text, arg)
            if tok.text.startswith("q") and tok.text[1:].isdigit():
                idx = int(tok.text[1:])
                if not 1 <= idx <= self.dim:
                    raise ExpressionError(
                        f"variable '{tok.text}' out of range for dimension {self.dim}", tok.pos)
                return Var(idx - 1)
            raise ExpressionError(f"unknown name '{tok.text}'", tok.pos)
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionError(f"expected a value, found '{tok.text or 'end of input'}'", tok.pos)


def parse(src: str, dim: int) -> Node:
    """Parse ``src`` over variables q1..q{dim}; raises ExpressionError with position."""
    if not src or not src.strip():
        raise ExpressionError("empty expression", 0)
    return _Parser(src, dim).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def pretty(node: Node) -> str:
    """Render with minimal parentheses; output reparses to the same AST."""
    return _render(node, 0)


def _render(node: Node, parent_prec: int) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return f"q{node.index + 1}"
    if isinstance(node, Neg):
        s = "-" + _render(node.arg, _PREC["neg"])
        return f"({s})" if parent_prec > _PREC["neg"] else s
    if isinstance(node, Call):
        return f"{node.func}({_render(node.arg, 0)})"
    prec = _PREC[node.op]
    # left-assoc for + - * /; '^' is right-assoc, and '-'/'/' need a tighter right side
    left = _render(node.left, prec + (1 if node.op == "^" else 0))
    right = _render(node.right, prec + (0 if node.op == "^" else 1))
    s = f"{left} {node.op} {right}" if node.op in "+-" else f"{left}{node.op}{right}"
    return f"({s})" if parent_prec > prec else s


def to_sympy(node: Node, symbols: list[sp.Symbol]) -> sp.Expr:
    if isinstance(node, Num):
        return sp.Float(node.value)
    if isinstance(node, Var):
        return symbols[node.index]
    if isinstance(node, Neg):
        return -to_sympy(node.arg, symbols)
    if isinstance(node, Call):
        return _SYMPY_FUNCS[node.func](to_sympy(node.arg, symbols))
    left = to_sympy(node.left, symbols)
    right = to_sympy(node.right, symbols)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        return left / right
    return left ** right


def growth_degree(node: Node) -> float:
    """Conservative polynomial growth degree of the expression in q.

    Returns the degree when the expression is (bounded function of affine
    arguments) x polynomial; returns ``inf`` when boundedness of the second
    derivative cannot be certified (transcendentals of nonlinear arguments,
    division by variable expressions, non-integer powers).  A result > 2
    means sup|V''| may be infinite.
    """
    if isinstance(node, Num):
        return 0.0
    if isinstance(node, Var):
        return 1.0
    if isinstance(node, Neg):
        return growth_degree(node.arg)
    if isinstance(node, Call):
        d = growth_degree(node.arg)
        if node.func == "exp":
            return 0.0 if d == 0.0 else math.inf
        # sin/cos/tanh keep curvature bounded only for affine arguments
        return 0.0 if d <= 1.0 else math.inf
    dl, dr = growth_degree(node.left), growth_degree(node.right)
    if node.op in "+-":
        return max(dl, dr)
    if node.op == "*":
        return dl + dr
    if node.op == "/":
        return dl if dr == 0.0 else math.inf
    # power: certify only nonnegative-integer literal exponents
    if isinstance(node.right, Num) and float(node.right.value).is_integer() and node.right.value >= 0:
        return dl * node.right.value
    if dl == 0.0 and dr == 0.0:
        return 0.0
    return math.inf
