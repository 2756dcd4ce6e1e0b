"""Scalar expressions in one spatial variable ``x`` plus named parameters.

Drift, diffusion and observed densities are supplied as text such as
``"-b*sin(x)"`` or ``"sqrt(t)/(pi*(t+x^2))"``.  The grammar, from loosest to
tightest binding::

    additive        + -
    multiplicative  * /
    unary minus     -
    power           ^          (right-associative)
    atom            number | x | identifier | name(expr) | (expr)

Every identifier other than ``x`` is a free parameter; there are no built-in
constants, so ``pi`` must be bound by the caller.  Evaluation is vectorised
over numpy arrays and never raises on domain errors: ``ln(-1)``, ``1/0`` and
``(-8)^(1/3)`` produce non-finite values that callers are expected to check.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

from .errors import ExprSyntaxError, UnboundParameterError, UnknownFunctionError

__all__ = [
    "Num", "Var", "Param", "Neg", "BinOp", "Call", "Expr",
    "FUNCTIONS", "parse", "evaluate", "to_source",
]

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "ln": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "tanh": np.tanh,
}

# Bounds recursion in the parser and in the tree walkers below.
MAX_DEPTH = 200
MAX_HEIGHT = 400


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Param, Neg, BinOp, Call]


def _collect_params(node, out):
    if isinstance(node, Param):
        out.add(node.name)
    elif isinstance(node, Neg):
        _collect_params(node.operand, out)
    elif isinstance(node, BinOp):
        _collect_params(node.left, out)
        _collect_params(node.right, out)
    elif isinstance(node, Call):
        _collect_params(node.arg, out)
    return out


@dataclass(frozen=True)
class Expr:
    """A parsed expression tree together with its free parameter names."""

    root: Node
    source: str = field(default="", compare=False)

    @property
    def params(self) -> frozenset[str]:
        return frozenset(_collect_params(self.root, set()))

    def __call__(self, x, **bindings):
        return evaluate(self, x, bindings)

    def __str__(self):
        return self.source or to_source(self)


# --------------------------------------------------------------------------
# tokenizer

_NUMBER = re.compile(r"(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_OPERATORS = "+-*/^()"


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    offset: int  # byte offset into the UTF-8 source


def _tokenize(source: str):
    tokens = []
    i = 0
    byte = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            i += 1
            byte += 1
            continue
        m = _NUMBER.match(source, i)
        if m:
            kind = "num"
        else:
            m = _IDENT.match(source, i)
            kind = "ident"
        if m:
            text = m.group()
            tokens.append(_Token(kind, text, byte))
            i = m.end()
            byte += len(text)
            continue
        if ch in _OPERATORS:
            tokens.append(_Token("op", ch, byte))
            i += 1
            byte += 1
            continue
        raise ExprSyntaxError(f"unexpected character {ch!r}", byte)
    tokens.append(_Token("end", "", byte))
    return tokens


# --------------------------------------------------------------------------
# parser (precedence climbing)

_BINARY = {"+": (10, 11), "-": (10, 11), "*": (20, 21), "/": (20, 21), "^": (31, 30)}
_UNARY_BP = 25


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0
        self.depth = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text):
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise ExprSyntaxError(_describe(tok), tok.offset, (repr(text),))
        return self.advance()

    def expression(self, min_bp=0):
        """Return ``(node, height)`` for the longest expression binding at ``min_bp``."""
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ExprSyntaxError("expression nested too deeply", self.peek().offset)
        left, height = self.prefix()
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _BINARY:
                break
            lbp, rbp = _BINARY[tok.text]
            if lbp < min_bp:
                break
            self.advance()
            right, rheight = self.expression(rbp)
            left = BinOp(tok.text, left, right)
            height = 1 + max(height, rheight)
            if height > MAX_HEIGHT:
                raise ExprSyntaxError("expression too long", tok.offset)
        self.depth -= 1
        return left, height

    def prefix(self):
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text)), 1
        if tok.kind == "ident":
            if tok.text == "x":
                return Var(), 1
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "(":
                if tok.text not in FUNCTIONS:
                    raise UnknownFunctionError(tok.text, tok.offset)
                self.advance()
                arg, height = self.expression()
                self.expect(")")
                return Call(tok.text, arg), height + 1
            if tok.text in FUNCTIONS:
                raise ExprSyntaxError(f"function {tok.text!r} used without call",
                                      nxt.offset, ("'('",))
            return Param(tok.text), 1
        if tok.kind == "op" and tok.text == "-":
            operand, height = self.expression(_UNARY_BP)
            return Neg(operand), height + 1
        if tok.kind == "op" and tok.text == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        raise ExprSyntaxError(_describe(tok), tok.offset, ("expression",))


def _describe(tok):
    if tok.kind == "end":
        return "unexpected end of input"
    return f"unexpected token {tok.text!r}"


def parse(source: str | bytes) -> Expr:
    """Parse ``source`` into an :class:`Expr`.

    Raises :class:`ExprSyntaxError` (with byte offset and the set of tokens
    that would have been accepted) or :class:`UnknownFunctionError`.
    """
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ExprSyntaxError("invalid UTF-8", exc.start) from None
    parser = _Parser(_tokenize(source))
    root, _ = parser.expression()
    tok = parser.peek()
    if tok.kind != "end":
        raise ExprSyntaxError(_describe(tok), tok.offset,
                              ("operator", "end of input"))
    return Expr(root, source)


# --------------------------------------------------------------------------
# evaluation

def _eval(node, x, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Param):
        return env[node.name]
    if isinstance(node, Neg):
        return np.negative(_eval(node.operand, x, env))
    if isinstance(node, BinOp):
        a = _eval(node.left, x, env)
        b = _eval(node.right, x, env)
        if node.op == "+":
            return np.add(a, b)
        if node.op == "-":
            return np.subtract(a, b)
        if node.op == "*":
            return np.multiply(a, b)
        if node.op == "/":
            return np.divide(a, b)
        return np.power(a, b)
    return FUNCTIONS[node.func](_eval(node.arg, x, env))


def evaluate(e: Expr, x, bindings: Mapping[str, float] | None = None):
    """Evaluate ``e`` at ``x`` (scalar or array) with parameter ``bindings``.

    Returns a Python float for scalar ``x`` and a float64 array otherwise.
    """
    bindings = bindings or {}
    missing = sorted(e.params - set(bindings))
    if missing:
        raise UnboundParameterError(missing[0])
    env = {k: np.float64(v) for k, v in bindings.items()}
    scalar = np.ndim(x) == 0
    xv = np.float64(x) if scalar else np.asarray(x, dtype=np.float64)
    with np.errstate(all="ignore"):
        out = _eval(e.root, xv, env)
    if scalar:
        return float(out)
    return np.broadcast_to(np.asarray(out, dtype=np.float64), xv.shape).copy()


# --------------------------------------------------------------------------
# printing

def _fmt_num(value):
    if value == float("inf"):
        return "1e999"
    return repr(float(value))


def _to_source(node):
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({_to_source(node.left)} {node.op} {_to_source(node.right)})"
    return f"{node.func}({_to_source(node.arg)})"


def to_source(e: Expr | Node) -> str:
    """Fully parenthesised text that reparses to the same tree."""
    return _to_source(e.root if isinstance(e, Expr) else e)
