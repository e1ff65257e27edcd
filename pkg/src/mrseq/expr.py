"""Arithmetic expression language for user-defined sequence variables.

Grammar (operators in increasing binding strength):

    sum     := product (("+" | "-") product)*        left associative
    product := unary (("*" | "/") unary)*            left associative
    unary   := "-" unary | power
    power   := atom ("^" unary)?                     right associative
    atom    := NUMBER | IDENT | IDENT "(" args ")" | "(" sum ")"

Exponentiation binds tighter than unary minus, so ``-2^2`` evaluates to -4.
Functions: sin, cos, tan, sqrt, exp, log, abs, floor, ceil (unary) and
min, max (binary).  Angles are radians throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from mrseq.constants import GAMMA_BAR

__all__ = [
    "Expression",
    "VariableScope",
    "parse",
    "evaluate",
    "free_identifiers",
    "to_source",
    "ExprError",
    "ExprSyntaxError",
    "EvalError",
    "UnknownIdentifierError",
    "CyclicDependencyError",
    "DomainError",
    "NonFiniteError",
]


class ExprError(Exception):
    """Base class for all expression errors."""


class ExprSyntaxError(ExprError):
    """Source text could not be parsed; carries the offset and what was expected."""

    def __init__(self, offset: int, expected: str):
        self.offset = offset
        self.expected = expected
        super().__init__(f"syntax error at offset {offset}: expected {expected}")


class EvalError(ExprError):
    """Base class for evaluation failures."""


class UnknownIdentifierError(EvalError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown identifier {name!r}")


class CyclicDependencyError(EvalError):
    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__("cyclic variable dependency: " + " -> ".join(self.cycle))


class DomainError(EvalError):
    pass


class NonFiniteError(EvalError):
    pass


class ArityError(EvalError):
    def __init__(self, func: str, expected: int, got: int):
        super().__init__(f"{func}() takes {expected} argument(s), got {got}")


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Node", ...]


Node = Num | Ident | Neg | BinOp | Call


@dataclass(frozen=True)
class Expression:
    """A parsed expression; ``source`` is the original text."""

    source: str
    ast: Node


# ---------------------------------------------------------------------------
# Tokenizer / parser

def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


class _Parser:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0

    def _skip_ws(self) -> None:
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str | None:
        self._skip_ws()
        if self.pos >= len(self.src):
            return None
        return self.src[self.pos]

    def _expect(self, char: str) -> None:
        if self._peek() != char:
            raise ExprSyntaxError(self.pos, f"'{char}'")
        self.pos += 1

    def parse(self) -> Node:
        node = self._sum()
        if self._peek() is not None:
            raise ExprSyntaxError(self.pos, "end of input")
        return node

    def _sum(self) -> Node:
        node = self._product()
        while self._peek() in ("+", "-"):
            op = self.src[self.pos]
            self.pos += 1
            node = BinOp(op, node, self._product())
        return node

    def _product(self) -> Node:
        node = self._unary()
        while self._peek() in ("*", "/"):
            op = self.src[self.pos]
            self.pos += 1
            node = BinOp(op, node, self._unary())
        return node

    def _unary(self) -> Node:
        if self._peek() == "-":
            self.pos += 1
            return Neg(self._unary())
        return self._power()

    def _power(self) -> Node:
        node = self._atom()
        if self._peek() == "^":
            self.pos += 1
            # right associative; exponent may itself be negated
            node = BinOp("^", node, self._unary())
        return node

    def _atom(self) -> Node:
        c = self._peek()
        if c is None:
            raise ExprSyntaxError(self.pos, "a value")
        if c == "(":
            self.pos += 1
            node = self._sum()
            self._expect(")")
            return node
        if c.isdigit() or c == ".":
            return self._number()
        if _is_ident_start(c):
            name = self._ident()
            if self._peek() == "(":
                self.pos += 1
                args = [self._sum()]
                while self._peek() == ",":
                    self.pos += 1
                    args.append(self._sum())
                self._expect(")")
                return Call(name, tuple(args))
            return Ident(name)
        raise ExprSyntaxError(self.pos, "a value")

    def _number(self) -> Num:
        start = self.pos
        src = self.src
        n = len(src)
        while self.pos < n and src[self.pos].isdigit():
            self.pos += 1
        if self.pos < n and src[self.pos] == ".":
            self.pos += 1
            while self.pos < n and src[self.pos].isdigit():
                self.pos += 1
        if self.pos == start or src[start:self.pos] == ".":
            raise ExprSyntaxError(start, "a number")
        if self.pos < n and src[self.pos] in "eE":
            mark = self.pos
            self.pos += 1
            if self.pos < n and src[self.pos] in "+-":
                self.pos += 1
            if self.pos < n and src[self.pos].isdigit():
                while self.pos < n and src[self.pos].isdigit():
                    self.pos += 1
            else:
                # bare "e" belongs to a following identifier, not this number
                self.pos = mark
        return Num(float(src[start:self.pos]))

    def _ident(self) -> str:
        start = self.pos
        while self.pos < len(self.src) and _is_ident_char(self.src[self.pos]):
            self.pos += 1
        return self.src[start:self.pos]


def parse(source: str) -> Expression:
    """Parse ``source`` into an Expression.  Raises ExprSyntaxError with an offset."""
    if not isinstance(source, str) or not source.strip():
        raise ExprSyntaxError(0, "a non-empty expression")
    return Expression(source, _Parser(source).parse())


# ---------------------------------------------------------------------------
# Printer

_PREC_SUM = 1
_PREC_PROD = 2
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _node_to_source(node: Node, min_prec: int) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Ident):
        return node.name
    if isinstance(node, Call):
        args = ", ".join(_node_to_source(a, _PREC_SUM) for a in node.args)
        return f"{node.func}({args})"
    if isinstance(node, Neg):
        text = "-" + _node_to_source(node.operand, _PREC_NEG)
        return text if _PREC_NEG >= min_prec else f"({text})"
    if isinstance(node, BinOp):
        if node.op in "+-":
            prec, lp, rp = _PREC_SUM, _PREC_SUM, _PREC_PROD
        elif node.op in "*/":
            prec, lp, rp = _PREC_PROD, _PREC_PROD, _PREC_NEG
        else:  # ^
            prec, lp, rp = _PREC_POW, _PREC_ATOM, _PREC_NEG
        text = f"{_node_to_source(node.left, lp)} {node.op} {_node_to_source(node.right, rp)}"
        return text if prec >= min_prec else f"({text})"
    raise TypeError(f"not an AST node: {node!r}")


def to_source(expr: Expression | Node) -> str:
    """Serialize an AST back to source; reparsing yields an identical AST."""
    node = expr.ast if isinstance(expr, Expression) else expr
    return _node_to_source(node, _PREC_SUM)


def free_identifiers(expr: Expression | Node) -> set[str]:
    """All identifiers referenced by the expression (function names excluded)."""
    node = expr.ast if isinstance(expr, Expression) else expr
    out: set[str] = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Ident):
            out.add(n.name)
        elif isinstance(n, Neg):
            stack.append(n.operand)
        elif isinstance(n, BinOp):
            stack.append(n.left)
            stack.append(n.right)
        elif isinstance(n, Call):
            stack.extend(n.args)
    return out


# ---------------------------------------------------------------------------
# Evaluation

_FUNCS_1 = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "abs": abs,
    "floor": math.floor,
    "ceil": math.ceil,
}

_FUNCS_2 = {"min": min, "max": max}

_NAME_RE_DESC = "letters, digits and underscores, not starting with a digit"


def is_valid_name(name: str) -> bool:
    return bool(name) and _is_ident_start(name[0]) and all(_is_ident_char(c) for c in name)


# Names the engine may bind; user variables must not shadow them.  `rep` is
# the innermost loop counter, `rep_<group>` the per-group counters.
BASE_RESERVED = frozenset({"gamma", "rep"})

BUILTIN_VALUES = {"gamma": GAMMA_BAR}


class VariableScope:
    """Ordered user variables plus engine-bound builtins.

    Lookup recurses through variable definitions with per-scope memoization
    and cycle detection.  Loop-counter bindings are layered on with
    :meth:`with_bindings`, which returns an independent view.
    """

    def __init__(
        self,
        entries: dict[str, Expression] | None = None,
        builtins: dict[str, float] | None = None,
    ):
        self.entries: dict[str, Expression] = dict(entries or {})
        self.builtins: dict[str, float] = dict(BUILTIN_VALUES)
        if builtins:
            self.builtins.update(builtins)
        self._memo: dict[str, float] = {}
        for name in self.entries:
            if not is_valid_name(name):
                raise ValueError(f"invalid variable name {name!r}: must use {_NAME_RE_DESC}")
            if name in BASE_RESERVED:
                raise ValueError(f"variable name {name!r} shadows a reserved name")

    @classmethod
    def from_strings(cls, mapping: dict[str, str]) -> "VariableScope":
        return cls({name: parse(src) for name, src in mapping.items()})

    def with_bindings(self, bindings: dict[str, float]) -> "VariableScope":
        """A derived scope with extra numeric builtins (loop counters)."""
        scope = VariableScope.__new__(VariableScope)
        scope.entries = self.entries
        scope.builtins = {**self.builtins, **bindings}
        scope._memo = {}
        return scope

    def resolve(self, name: str, _stack: tuple[str, ...] = ()) -> float:
        if name in self.builtins:
            return self.builtins[name]
        if name in self._memo:
            return self._memo[name]
        if name not in self.entries:
            raise UnknownIdentifierError(name)
        if name in _stack:
            cycle = list(_stack[_stack.index(name):]) + [name]
            raise CyclicDependencyError(cycle)
        value = _eval_node(self.entries[name].ast, self, _stack + (name,))
        self._memo[name] = value
        return value


def _apply_binop(op: str, a: float, b: float) -> float:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0.0:
            raise DomainError("division by zero")
        return a / b
    if op == "^":
        try:
            return math.pow(a, b)
        except ValueError:
            raise DomainError(f"invalid power {a} ^ {b}") from None
        except OverflowError:
            raise NonFiniteError(f"overflow in {a} ^ {b}") from None
    raise ValueError(f"unknown operator {op!r}")


def _eval_node(node: Node, scope: VariableScope, stack: tuple[str, ...]) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Ident):
        return scope.resolve(node.name, stack)
    if isinstance(node, Neg):
        return -_eval_node(node.operand, scope, stack)
    if isinstance(node, BinOp):
        a = _eval_node(node.left, scope, stack)
        b = _eval_node(node.right, scope, stack)
        return _apply_binop(node.op, a, b)
    if isinstance(node, Call):
        args = [_eval_node(a, scope, stack) for a in node.args]
        if node.func in _FUNCS_2:
            if len(args) != 2:
                raise ArityError(node.func, 2, len(args))
            return float(_FUNCS_2[node.func](*args))
        if node.func == "sqrt":
            if len(args) != 1:
                raise ArityError("sqrt", 1, len(args))
            if args[0] < 0:
                raise DomainError(f"sqrt of negative value {args[0]}")
            return math.sqrt(args[0])
        if node.func == "log":
            if len(args) != 1:
                raise ArityError("log", 1, len(args))
            if args[0] <= 0:
                raise DomainError(f"log of non-positive value {args[0]}")
            return math.log(args[0])
        if node.func in _FUNCS_1:
            if len(args) != 1:
                raise ArityError(node.func, 1, len(args))
            try:
                return float(_FUNCS_1[node.func](args[0]))
            except OverflowError:
                raise NonFiniteError(f"overflow in {node.func}({args[0]})") from None
        raise UnknownIdentifierError(node.func)
    raise TypeError(f"not an AST node: {node!r}")


def evaluate(expr: Expression | Node | str, scope: VariableScope | None = None) -> float:
    """Evaluate an expression to a finite float within ``scope``.

    Raises UnknownIdentifierError, CyclicDependencyError, DomainError or
    NonFiniteError.  Deterministic and side-effect free for equal inputs.
    """
    if isinstance(expr, str):
        expr = parse(expr)
    node = expr.ast if isinstance(expr, Expression) else expr
    if scope is None:
        scope = VariableScope()
    value = _eval_node(node, scope, ())
    if not math.isfinite(value):
        raise NonFiniteError(f"expression evaluated to {value}")
    return float(value)
