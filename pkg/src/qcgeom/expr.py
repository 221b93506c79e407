"""Expression trees for defining functions, with a recursive-descent parser
and a canonical printer.

Grammar (lowest to highest precedence)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' ['-'] INT)?
    atom    := NUMBER | FUNC '(' INT ')' | '(' sum ')'

FUNC is one of re, imi, imj, imk (coordinate accessors of a quaternionic
slot) or normq (squared norm of a slot).
"""

import re
from dataclasses import dataclass
from typing import Union

from .errors import ParseError, SlotIndexOutOfRange, UnknownIdentifier

ACCESSORS = {"re": 0, "imi": 1, "imj": 2, "imk": 3}
FUNCTIONS = tuple(ACCESSORS) + ("normq",)


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Coord:
    slot: int
    component: int  # 0..3 for t, x, y, z


@dataclass(frozen=True)
class NormQ:
    slot: int


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


Expr = Union[Const, Coord, NormQ, Neg, BinOp, Pow]


def max_slot(e):
    """Largest slot index referenced by the expression (-1 if none)."""
    if isinstance(e, (Coord, NormQ)):
        return e.slot
    if isinstance(e, Neg):
        return max_slot(e.arg)
    if isinstance(e, Pow):
        return max_slot(e.base)
    if isinstance(e, BinOp):
        return max(max_slot(e.left), max_slot(e.right))
    return -1


# --- tokenizer ----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


@dataclass
class Token:
    kind: str  # 'num', 'name', 'op', 'end'
    text: str
    col: int  # 1-based


def tokenize(text, line=1, col0=1):
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col0 + pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append(Token(kind, m.group(kind), col0 + start))
        pos = m.end()
    tokens.append(Token("end", "", col0 + len(text.rstrip())))
    return tokens


class _Parser:
    def __init__(self, text, n_slots=None, line=1, col0=1):
        self.tokens = tokenize(text, line, col0)
        self.i = 0
        self.line = line
        self.n_slots = n_slots

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None, cls=ParseError):
        tok = tok or self.peek()
        return cls(message, self.line, tok.col)

    def expect_op(self, text):
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            found = tok.text or "end of input"
            raise self.error(f"expected '{text}', found {found!r}")
        return self.advance()

    def parse(self):
        e = self.sum()
        if self.peek().kind != "end":
            raise self.error(f"expected an operator or end of input, found {self.peek().text!r}")
        return e

    def sum(self):
        e = self.product()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            e = BinOp(op, e, self.product())
        return e

    def product(self):
        e = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            sign = 1
            if self.peek().kind == "op" and self.peek().text == "-":
                self.advance()
                sign = -1
            tok = self.peek()
            if tok.kind != "num" or not tok.text.isdigit():
                raise self.error("expected an integer exponent")
            self.advance()
            return Pow(base, sign * int(tok.text))
        return base

    def atom(self):
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            e = self.sum()
            self.expect_op(")")
            return e
        if tok.kind == "name":
            if tok.text not in FUNCTIONS:
                raise self.error(f"unknown identifier {tok.text!r}", tok, UnknownIdentifier)
            self.advance()
            self.expect_op("(")
            idx_tok = self.peek()
            if idx_tok.kind != "num" or not idx_tok.text.isdigit():
                raise self.error("expected a slot index")
            self.advance()
            slot = int(idx_tok.text)
            if self.n_slots is not None and slot >= self.n_slots:
                raise self.error(
                    f"slot index {slot} out of range for dim = {self.n_slots}",
                    idx_tok, SlotIndexOutOfRange)
            self.expect_op(")")
            if tok.text == "normq":
                return NormQ(slot)
            return Coord(slot, ACCESSORS[tok.text])
        found = tok.text or "end of input"
        raise self.error(f"expected an operand, found {found!r}")


def parse_expr(text, n_slots=None, line=1, col0=1):
    """Parse an expression; ``line``/``col0`` position it inside a file."""
    return _Parser(text, n_slots, line, col0).parse()


# --- canonical printer ----------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_UNARY_PREC = 3
_POW_PREC = 4


def _fmt_const(v):
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def to_text(e, parent_prec=0, right_operand=False):
    """Print with the minimum parentheses needed to reparse the same tree."""
    if isinstance(e, Const):
        s = _fmt_const(e.value)
        if e.value < 0:
            return f"({s})"
        return s
    if isinstance(e, Coord):
        name = [k for k, v in ACCESSORS.items() if v == e.component][0]
        return f"{name}({e.slot})"
    if isinstance(e, NormQ):
        return f"normq({e.slot})"
    if isinstance(e, Neg):
        s = "-" + to_text(e.arg, _UNARY_PREC)
        prec = _UNARY_PREC
    elif isinstance(e, Pow):
        base = to_text(e.base, _POW_PREC + 1)
        s = f"{base}^{e.exponent}"
        prec = _POW_PREC
    else:
        prec = _PREC[e.op]
        left = to_text(e.left, prec)
        right = to_text(e.right, prec, right_operand=True)
        s = f"{left} {e.op} {right}"
    if prec < parent_prec or (right_operand and prec == parent_prec and isinstance(e, BinOp)):
        return f"({s})"
    return s


# --- polynomial expansion -----------------------------------------------------


def _poly_add(a, b, sign=1.0):
    out = dict(a)
    for mono, c in b.items():
        out[mono] = out.get(mono, 0.0) + sign * c
    return out


def _poly_mul(a, b):
    out = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            mono = tuple(sorted(ma + mb))
            out[mono] = out.get(mono, 0.0) + ca * cb
    return out


def to_polynomial(e):
    """Expand into {monomial: coefficient}, a monomial being the sorted tuple
    of flat coordinate indices (4*slot + component) it multiplies.

    Returns None when the expression is not a polynomial (division by a
    non-constant or a negative power)."""
    if isinstance(e, Const):
        return {(): e.value}
    if isinstance(e, Coord):
        return {(4 * e.slot + e.component,): 1.0}
    if isinstance(e, NormQ):
        return {(4 * e.slot + m, 4 * e.slot + m): 1.0 for m in range(4)}
    if isinstance(e, Neg):
        p = to_polynomial(e.arg)
        return None if p is None else {m: -c for m, c in p.items()}
    if isinstance(e, Pow):
        p = to_polynomial(e.base)
        if p is None or e.exponent < 0:
            return None
        out = {(): 1.0}
        for _ in range(e.exponent):
            out = _poly_mul(out, p)
        return out
    a = to_polynomial(e.left)
    b = to_polynomial(e.right)
    if a is None or b is None:
        return None
    if e.op == "+":
        return _poly_add(a, b)
    if e.op == "-":
        return _poly_add(a, b, -1.0)
    if e.op == "*":
        return _poly_mul(a, b)
    if set(b) == {()} and b[()] != 0.0:
        return {m: c / b[()] for m, c in a.items()}
    return None


def poly_derivative(p, i):
    """d/dx_i of a polynomial from to_polynomial."""
    out = {}
    for mono, c in p.items():
        k = mono.count(i)
        if k:
            rest = list(mono)
            rest.remove(i)
            key = tuple(rest)
            out[key] = out.get(key, 0.0) + k * c
    return out
