# FILE: dualsim/rates.py
# CONTRACT: rate expressions as small immutable trees; every leaf is a constant,
# a parameter name or a species total. Build with operators, parse from text, or compile.
import re
from dataclasses import dataclass

from .errors import DivisionByZero, RateSyntaxError, UnboundIdentifier
from .schema import PopulationState
from .utils.text import suggest


class RateExpr:
    def __add__(self, o):
        return BinOp("+", self, lift(o))

    def __radd__(self, o):
        return BinOp("+", lift(o), self)

    def __sub__(self, o):
        return BinOp("-", self, lift(o))

    def __rsub__(self, o):
        return BinOp("-", lift(o), self)

    def __mul__(self, o):
        return BinOp("*", self, lift(o))

    def __rmul__(self, o):
        return BinOp("*", lift(o), self)

    def __truediv__(self, o):
        return BinOp("/", self, lift(o))

    def __rtruediv__(self, o):
        return BinOp("/", lift(o), self)

    def __pow__(self, o):
        return BinOp("^", self, lift(o))

    def __neg__(self):
        return BinOp("-", Const(0.0), self)

    def leaves(self):
        yield self


@dataclass(frozen=True, eq=True)
class Const(RateExpr):
    value: float

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True, eq=True)
class Param(RateExpr):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, eq=True)
class Count(RateExpr):
    """Total number of agents of one species."""

    species: str

    def __str__(self):
        return self.species


@dataclass(frozen=True, eq=True)
class BinOp(RateExpr):
    op: str
    left: RateExpr
    right: RateExpr

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"

    def leaves(self):
        yield from self.left.leaves()
        yield from self.right.leaves()


@dataclass(frozen=True, eq=True)
class Saturating(RateExpr):
    """x / (g + x)"""

    x: RateExpr
    g: RateExpr

    def __str__(self):
        return f"sat({self.x}, {self.g})"

    def leaves(self):
        yield from self.x.leaves()
        yield from self.g.leaves()


def lift(v):
    return v if isinstance(v, RateExpr) else Const(float(v))


def P(name):
    return Param(name)


def N(species):
    return Count(species)


def sat(x, g):
    return Saturating(lift(x), lift(g))


def params_used(expr):
    return {leaf.name for leaf in expr.leaves() if isinstance(leaf, Param)}


def species_used(expr):
    return {leaf.species for leaf in expr.leaves() if isinstance(leaf, Count)}


# evaluation

_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "^": lambda a, b: a**b,
}


def eval_rate(expr, state, params):
    """Evaluate against species totals (`state` mapping or PopulationState) and a parameter mapping."""
    values = state.values if isinstance(state, PopulationState) else state
    env = params.as_env() if hasattr(params, "as_env") else params
    try:
        return _eval(expr, values, env)
    except ZeroDivisionError:
        raise DivisionByZero(f"division by zero evaluating {expr}") from None


def _eval(e, values, env):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Param):
        return float(env[e.name])
    if isinstance(e, Count):
        return float(values.get(e.species, 0))
    if isinstance(e, Saturating):
        x = _eval(e.x, values, env)
        return x / (_eval(e.g, values, env) + x)
    return _OPS[e.op](_eval(e.left, values, env), _eval(e.right, values, env))


def compile_rate(expr, species, params):
    """Closure over a list of species totals (species order), parameters folded in as constants."""
    index = {s: i for i, s in enumerate(species)}
    env = params.as_env() if hasattr(params, "as_env") else dict(params)
    return _compile(expr, index, env)


def _compile(e, index, env):
    if isinstance(e, Const):
        v = e.value
        return lambda y: v
    if isinstance(e, Param):
        v = float(env[e.name])
        return lambda y: v
    if isinstance(e, Count):
        i = index[e.species]
        return lambda y: y[i]
    if isinstance(e, Saturating):
        fx, fg = _compile(e.x, index, env), _compile(e.g, index, env)

        def saturating(y):
            x = fx(y)
            return x / (fg(y) + x)

        return saturating
    fl, fr = _compile(e.left, index, env), _compile(e.right, index, env)
    op = e.op
    if op == "+":
        return lambda y: fl(y) + fr(y)
    if op == "-":
        return lambda y: fl(y) - fr(y)
    if op == "*":
        return lambda y: fl(y) * fr(y)
    if op == "/":
        return lambda y: fl(y) / fr(y)
    return lambda y: fl(y) ** fr(y)


# parsing: expr := term (('+'|'-') term)* ; term := unary (('*'|'/') unary)* ;
# unary := '-' unary | power ; power := atom ('^' unary)? ; atom := number | ident | '(' expr ')'

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)|([A-Za-z_][A-Za-z0-9_]*)|(\S))")


def _tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            break  # trailing whitespace
        num, ident, sym = m.groups()
        start = m.start(m.lastindex)
        if num is not None:
            toks.append(("num", num, start))
        elif ident is not None:
            toks.append(("id", ident, start))
        else:
            if sym not in "+-*/^()":
                raise RateSyntaxError(f"unexpected character {sym!r}", start + 1, text)
            toks.append((sym, sym, start))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text, params, species):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.params = set(params)
        self.species = set(species)

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, tok, what):
        found = "end of input" if tok[0] == "end" else repr(tok[1])
        raise RateSyntaxError(f"expected {what}, found {found}", tok[2] + 1, self.text)

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            self.fail(tok, "operator or end of input")
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.peek()[0] == "-":
            self.take()
            return BinOp("-", Const(0.0), self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return Const(float(val))
        if kind == "id":
            if val in self.params:
                return Param(val)
            if val in self.species:
                return Count(val)
            raise UnboundIdentifier(val, suggest(val, self.params | self.species))
        if kind == "(":
            e = self.expr()
            close = self.take()
            if close[0] != ")":
                self.fail(close, "')'")
            return e
        self.fail(tok, "number, name or '('")


def parse_rate_expr(text, params=(), species=()):
    """Parse a formula; identifiers bind to parameter names first, then species totals."""
    return _Parser(text, params, species).parse()
