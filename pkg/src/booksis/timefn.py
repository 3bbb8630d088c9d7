"""Time-dependent coefficient functions.

Every non-autonomous system in this package is driven by real-valued
coefficient functions of time.  A :class:`CoefficientFunction` is either a
builtin family (constant, linear, sinusoidal) or a parsed arithmetic
expression over ``t``.  Evaluation is pure and deterministic; values are
immutable and safe to share across threads.

Expression grammar (whitespace insignificant)::

    expr    := term    { ('+' | '-') term }
    term    := factor  { ('*' | '/') factor }
    factor  := '-' factor | power
    power   := atom [ '^' factor ]          # right-associative
    atom    := NUMBER | 't' | NAME '(' expr ')' | '(' expr ')'
    NAME    := sin | cos | exp | ln | abs

``^`` binds tighter than unary minus, so ``-t^2`` means ``-(t^2)``.
Discontinuous coefficients can be emulated with expression combinations,
but the quadrature layer assumes piecewise smoothness; keeping
coefficients smooth is the caller's responsibility.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from .errors import (
    ArityMismatchError,
    EvaluationDomainError,
    ExpressionSyntaxError,
    UnknownIdentifierError,
)

__all__ = [
    "Literal",
    "TimeVar",
    "Neg",
    "BinOp",
    "Call",
    "CoefficientFunction",
    "parse_expression",
    "to_text",
    "evaluate_ast",
    "evaluate",
    "FUNCTION_NAMES",
]

FUNCTION_NAMES = ("sin", "cos", "exp", "ln", "abs")


# --- expression tree -------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    value: float


@dataclass(frozen=True)
class TimeVar:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "ExpressionAst"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "ExpressionAst"
    right: "ExpressionAst"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "ExpressionAst"


ExpressionAst = Union[Literal, TimeVar, Neg, BinOp, Call]


# --- tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExpressionSyntaxError(
                f"unexpected character {source[pos]!r}", pos
            )
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        kind = m.lastgroup
        tokens.append((kind, m.group(), m.start()))
    tokens.append(("end", "", n))
    return tokens


# --- parser -------------------------------------------------------------------

class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, text, offset = self.peek()
        if kind == "op" and text == op:
            return self.advance()
        raise ExpressionSyntaxError(
            f"expected {op!r}, found {text!r}" if text else f"expected {op!r}",
            offset,
        )

    def parse(self) -> ExpressionAst:
        node = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected trailing {text!r}", offset)
        return node

    def expr(self) -> ExpressionAst:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = BinOp(text, node, self.term())
            else:
                return node

    def term(self) -> ExpressionAst:
        node = self.factor()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = BinOp(text, node, self.factor())
            else:
                return node

    def factor(self) -> ExpressionAst:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            operand = self.factor()
            # fold a negated literal so pretty-printing round-trips
            if isinstance(operand, Literal):
                return Literal(-operand.value)
            return Neg(operand)
        return self.power()

    def power(self) -> ExpressionAst:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return BinOp("^", base, self.factor())
        return base

    def atom(self) -> ExpressionAst:
        kind, text, offset = self.advance()
        if kind == "num":
            return Literal(float(text))
        if kind == "name":
            if text == "t":
                return TimeVar()
            if text not in FUNCTION_NAMES:
                raise UnknownIdentifierError(text, offset)
            self.expect_op("(")
            args = [self.expr()]
            while True:
                k, tx, _ = self.peek()
                if k == "op" and tx == ",":
                    self.advance()
                    args.append(self.expr())
                else:
                    break
            self.expect_op(")")
            if len(args) != 1:
                raise ArityMismatchError(text, len(args), offset)
            return Call(text, args[0])
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionSyntaxError(
            f"expected a value, found {text!r}" if text else "unexpected end of input",
            offset,
        )


def parse_expression(source: str) -> ExpressionAst:
    """Parse expression text into a tree.

    Raises :class:`ExpressionSyntaxError`, :class:`UnknownIdentifierError`
    or :class:`ArityMismatchError`, each carrying the byte offset of the
    offending token.
    """
    if not source or not source.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return _Parser(source).parse()


# --- pretty printer ----------------------------------------------------------

# precedence levels used for minimal parenthesisation
_LVL_ADD, _LVL_MUL, _LVL_NEG, _LVL_POW, _LVL_ATOM = 1, 2, 3, 4, 5


def _render(node: ExpressionAst, min_level: int) -> str:
    if isinstance(node, Literal):
        text = repr(node.value)
        # sign test via copysign so that -0.0 is parenthesized too
        if math.copysign(1.0, node.value) < 0 and min_level > _LVL_NEG:
            return f"({text})"
        return text
    if isinstance(node, TimeVar):
        return "t"
    if isinstance(node, Call):
        return f"{node.name}({_render(node.arg, _LVL_ADD)})"
    if isinstance(node, Neg):
        text = "-" + _render(node.operand, _LVL_NEG)
        return f"({text})" if min_level > _LVL_NEG else text
    if isinstance(node, BinOp):
        if node.op in "+-":
            level = _LVL_ADD
            text = f"{_render(node.left, _LVL_ADD)} {node.op} {_render(node.right, _LVL_MUL)}"
        elif node.op in "*/":
            level = _LVL_MUL
            text = f"{_render(node.left, _LVL_MUL)}{node.op}{_render(node.right, _LVL_NEG)}"
        else:  # ^
            level = _LVL_POW
            text = f"{_render(node.left, _LVL_ATOM)}^{_render(node.right, _LVL_NEG)}"
        return f"({text})" if min_level > level else text
    raise TypeError(f"not an expression node: {node!r}")


def to_text(node: ExpressionAst) -> str:
    """Render a tree back to expression text; re-parsing the result yields
    a structurally identical tree."""
    return _render(node, _LVL_ADD)


# --- evaluation ---------------------------------------------------------------

def evaluate_ast(node: ExpressionAst, t: float) -> float:
    v = _eval(node, t)
    if not math.isfinite(v):
        raise EvaluationDomainError("non-finite value", t, to_text(node))
    return v


def _eval(node: ExpressionAst, t: float) -> float:
    if isinstance(node, Literal):
        return node.value
    if isinstance(node, TimeVar):
        return t
    if isinstance(node, Neg):
        return -_eval(node.operand, t)
    if isinstance(node, BinOp):
        a = _eval(node.left, t)
        b = _eval(node.right, t)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if b == 0.0:
                raise EvaluationDomainError("division by zero", t, to_text(node))
            return a / b
        try:
            return math.pow(a, b)
        except (ValueError, ZeroDivisionError) as exc:
            raise EvaluationDomainError(str(exc), t, to_text(node)) from exc
        except OverflowError as exc:
            raise EvaluationDomainError("overflow in power", t, to_text(node)) from exc
    if isinstance(node, Call):
        arg = _eval(node.arg, t)
        if node.name == "sin":
            return math.sin(arg)
        if node.name == "cos":
            return math.cos(arg)
        if node.name == "abs":
            return abs(arg)
        if node.name == "exp":
            try:
                return math.exp(arg)
            except OverflowError as exc:
                raise EvaluationDomainError("overflow in exp", t, to_text(node)) from exc
        # ln
        if arg <= 0.0:
            raise EvaluationDomainError(
                f"ln of non-positive argument {arg!r}", t, to_text(node)
            )
        return math.log(arg)
    raise TypeError(f"not an expression node: {node!r}")


# --- coefficient functions -----------------------------------------------------

@dataclass(frozen=True)
class _ConstantDef:
    value: float


@dataclass(frozen=True)
class _LinearDef:
    slope: float
    intercept: float


@dataclass(frozen=True)
class _SinusoidalDef:
    base: float       # c0
    relative: float   # epsilon
    frequency: float  # omega
    phase: float      # phi


@dataclass(frozen=True)
class _ExpressionDef:
    ast: ExpressionAst


_Definition = Union[_ConstantDef, _LinearDef, _SinusoidalDef, _ExpressionDef]


@dataclass(frozen=True)
class CoefficientFunction:
    """A real-valued function of time ``t``.

    Instances come from the classmethod constructors.  They are callable:
    ``f(t)`` evaluates the function.  ``domain_hint`` is an optional
    closed interval of validity; evaluation outside it is rejected.
    """

    definition: _Definition
    domain_hint: tuple[float, float] | None = None

    # -- constructors --------------------------------------------------

    @classmethod
    def constant(cls, value: float, domain_hint=None) -> "CoefficientFunction":
        return cls(_ConstantDef(float(value)), domain_hint)

    @classmethod
    def linear(cls, slope: float, intercept: float, domain_hint=None) -> "CoefficientFunction":
        """slope*t + intercept"""
        return cls(_LinearDef(float(slope), float(intercept)), domain_hint)

    @classmethod
    def sinusoidal(cls, base: float, relative: float, frequency: float,
                   phase: float = 0.0, domain_hint=None) -> "CoefficientFunction":
        """base*(1 + relative*sin(frequency*t + phase))"""
        return cls(
            _SinusoidalDef(float(base), float(relative), float(frequency), float(phase)),
            domain_hint,
        )

    @classmethod
    def from_text(cls, source: str, domain_hint=None) -> "CoefficientFunction":
        return cls(_ExpressionDef(parse_expression(source)), domain_hint)

    @classmethod
    def from_ast(cls, ast: ExpressionAst, domain_hint=None) -> "CoefficientFunction":
        return cls(_ExpressionDef(ast), domain_hint)

    # -- evaluation -----------------------------------------------------

    def __call__(self, t: float) -> float:
        if self.domain_hint is not None:
            lo, hi = self.domain_hint
            if not (lo <= t <= hi):
                raise EvaluationDomainError(
                    f"t outside domain hint [{lo!r}, {hi!r}]", t, self.to_text()
                )
        d = self.definition
        if isinstance(d, _ConstantDef):
            return d.value
        if isinstance(d, _LinearDef):
            return d.slope * t + d.intercept
        if isinstance(d, _SinusoidalDef):
            return d.base * (1.0 + d.relative * math.sin(d.frequency * t + d.phase))
        return evaluate_ast(d.ast, t)

    # -- introspection ----------------------------------------------------

    def as_expression(self) -> ExpressionAst:
        """Expression-tree equivalent of this function (identity for
        expression-backed instances)."""
        d = self.definition
        if isinstance(d, _ExpressionDef):
            return d.ast
        if isinstance(d, _ConstantDef):
            return Literal(d.value)
        if isinstance(d, _LinearDef):
            return BinOp("+", BinOp("*", Literal(d.slope), TimeVar()), Literal(d.intercept))
        # base*(1 + relative*sin(frequency*t + phase))
        inner = BinOp("+", BinOp("*", Literal(d.frequency), TimeVar()), Literal(d.phase))
        return BinOp(
            "*",
            Literal(d.base),
            BinOp("+", Literal(1.0), BinOp("*", Literal(d.relative), Call("sin", inner))),
        )

    def to_text(self) -> str:
        return to_text(self.as_expression())

    def is_constant(self) -> bool:
        d = self.definition
        if isinstance(d, _ConstantDef):
            return True
        if isinstance(d, _LinearDef):
            return d.slope == 0.0
        if isinstance(d, _SinusoidalDef):
            return d.relative == 0.0 or (d.frequency == 0.0 and d.phase == 0.0)
        return _is_constant_ast(d.ast)


def _is_constant_ast(node: ExpressionAst) -> bool:
    if isinstance(node, Literal):
        return True
    if isinstance(node, TimeVar):
        return False
    if isinstance(node, Neg):
        return _is_constant_ast(node.operand)
    if isinstance(node, BinOp):
        return _is_constant_ast(node.left) and _is_constant_ast(node.right)
    return _is_constant_ast(node.arg)


def evaluate(f: CoefficientFunction, t: float) -> float:
    """Evaluate ``f`` at time ``t``; always a finite real or a typed error."""
    return f(t)
