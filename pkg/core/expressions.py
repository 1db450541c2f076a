"""Analytic expression language used in experiment configs.

Expressions describe conformal factors σ(x), componentwise maps f^i(x) and
vector-field components ξ^i(x). Evaluation is generic over the scalar type, so
the dual numbers of :mod:`calc.autodiff` flow through unchanged.

Grammar (see GRAMMAR.md)::

    expression → term ( ( "+" | "-" ) term )* ;
    term       → unary ( ( "*" | "/" ) unary )* ;
    unary      → "-" unary | power ;
    power      → primary ( "^" unary )? ;
    primary    → NUMBER | VARIABLE | FUNCTION "(" expression ")"
               | "(" expression ")" ;

Error offsets are 1-based byte positions in the UTF-8 source.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Mapping, Sequence, Tuple, Union

from calc import autodiff as ad
from models.errors import IndexOutOfRange, ParseError, UnknownIdentifier

FUNCTIONS: Dict[str, Callable[[Any], Any]] = {
    "exp": ad.exp,
    "ln": ad.log,
    "sin": ad.sin,
    "cos": ad.cos,
    "tanh": ad.tanh,
    "abs": ad.absolute,
    "sign": ad.sign,
    "sqrt": ad.sqrt,
}

BINARY_OPERATORS = ("+", "-", "*", "/", "^")
_PRIMARY_START = ("number", "variable", "function", "(", "-")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)
_VARIABLE_RE = re.compile(r"([xy])(\d+)")


# ---------------------------------------------------------------------------
# Syntax tree


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str
    index: int

    @property
    def name(self) -> str:
        return f"{self.kind}{self.index}"


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


Node = Union[Num, Var, Neg, BinOp, Call]


@dataclass(frozen=True)
class Expr:
    """Parsed expression over variables x0..x{n-1}, y0..y{n-1}."""

    root: Node
    n: int
    source: str = ""

    def __str__(self) -> str:
        return to_source(self)

    def evaluate_xy(self, x: Sequence[Any], y: Sequence[Any] = ()) -> Any:
        def lookup(var: Var) -> Any:
            values = x if var.kind == "x" else y
            return values[var.index]

        return _evaluate(self.root, lookup)


# ---------------------------------------------------------------------------
# Tokenizer


@dataclass(frozen=True)
class Token:
    type: str
    text: str
    offset: int


def _byte_offset(source: str, index: int) -> int:
    return len(source[:index].encode("utf-8")) + 1


def tokenize(source: str) -> List[Token]:
    tokens: List[Token] = []
    position = 0
    while position < len(source):
        match = _TOKEN_RE.match(source, position)
        if match is None:
            raise ParseError(
                _byte_offset(source, position),
                source[position],
                _PRIMARY_START + BINARY_OPERATORS + (")",),
                source,
            )
        kind = match.lastgroup or ""
        if kind != "ws":
            text = match.group()
            tokens.append(Token(text if kind == "op" else kind, text, _byte_offset(source, position)))
        position = match.end()
    tokens.append(Token("EOF", "end of input", _byte_offset(source, len(source))))
    return tokens


# ---------------------------------------------------------------------------
# Parser


class Parser:
    def __init__(self, source: str, n: int) -> None:
        self.source = source
        self.n = n
        self.tokens = tokenize(source)
        self.current_token = 0
        self.depth = 0

    def next(self) -> Token:
        return self.tokens[self.current_token]

    def advance(self) -> Token:
        token = self.tokens[self.current_token]
        if token.type != "EOF":
            self.current_token += 1
        return token

    def check(self, types: Iterable[str]) -> bool:
        return self.next().type in types

    def match(self, types: Iterable[str]) -> Token | None:
        if self.check(types):
            return self.advance()
        return None

    def error(self, expected: Iterable[str]) -> ParseError:
        token = self.next()
        return ParseError(token.offset, token.text, expected, self.source)

    def _follow(self) -> Tuple[str, ...]:
        return BINARY_OPERATORS + ((")",) if self.depth else ("end of input",))

    def parse(self) -> Node:
        node = self.expression()
        if not self.check(["EOF"]):
            raise self.error(self._follow())
        return node

    def expression(self) -> Node:
        node = self.term()
        while (token := self.match(["+", "-"])) is not None:
            node = BinOp(token.type, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while (token := self.match(["*", "/"])) is not None:
            node = BinOp(token.type, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.match(["-"]) is not None:
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.match(["^"]) is not None:
            return BinOp("^", base, self.unary())
        return base

    def primary(self) -> Node:
        token = self.next()
        if token.type == "number":
            self.advance()
            return Num(float(token.text))
        if token.type == "ident":
            self.advance()
            return self._identifier(token)
        if token.type == "(":
            self.advance()
            return self._parenthesised()
        raise self.error(_PRIMARY_START)

    def _parenthesised(self) -> Node:
        self.depth += 1
        node = self.expression()
        if self.match([")"]) is None:
            raise self.error(BINARY_OPERATORS + (")",))
        self.depth -= 1
        return node

    def _identifier(self, token: Token) -> Node:
        variable = _VARIABLE_RE.fullmatch(token.text)
        if variable is not None:
            index = int(variable.group(2))
            if index >= self.n:
                raise IndexOutOfRange(token.offset, token.text, self.n, self.source)
            return Var(variable.group(1), index)
        if token.text in FUNCTIONS:
            if self.match(["("]) is None:
                raise self.error(["("])
            return Call(token.text, self._parenthesised())
        raise UnknownIdentifier(token.offset, token.text, self.source)


def parse(src: str, n: int) -> Expr:
    """Parse ``src`` into an immutable :class:`Expr` for dimension ``n``."""

    return Expr(root=Parser(src, n).parse(), n=n, source=src)


# ---------------------------------------------------------------------------
# Evaluation and inspection


def _evaluate(node: Node, lookup: Callable[[Var], Any]) -> Any:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return lookup(node)
    if isinstance(node, Neg):
        return -_evaluate(node.operand, lookup)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](_evaluate(node.arg, lookup))
    left = _evaluate(node.left, lookup)
    right = _evaluate(node.right, lookup)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        return ad.div(left, right)
    return ad.power(left, right)


def evaluate(expr: Expr, env: Mapping[str, Any]) -> Any:
    """Evaluate ``expr`` with variables taken from ``env`` (e.g. ``{"x0": 1.0}``)."""

    def lookup(var: Var) -> Any:
        try:
            return env[var.name]
        except KeyError as exc:
            raise KeyError(f"variable {var.name} is not bound") from exc

    return _evaluate(expr.root, lookup)


def _collect(node: Node, names: set) -> None:
    if isinstance(node, Var):
        names.add(node.name)
    elif isinstance(node, Neg):
        _collect(node.operand, names)
    elif isinstance(node, Call):
        _collect(node.arg, names)
    elif isinstance(node, BinOp):
        _collect(node.left, names)
        _collect(node.right, names)


def free_vars(expr: Expr) -> FrozenSet[str]:
    names: set = set()
    _collect(expr.root, names)
    return frozenset(names)


def y_variables(expr: Expr) -> FrozenSet[str]:
    return frozenset(name for name in free_vars(expr) if name.startswith("y"))


def is_constant(expr: Expr) -> bool:
    return not free_vars(expr)


# Printing precedence: sums < products < unary minus < powers < primaries.
_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _precedence(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PRECEDENCE[node.op]
    if isinstance(node, Neg):
        return _PRECEDENCE["neg"]
    return 5


def _wrap(text: str, needed: bool) -> str:
    return f"({text})" if needed else text


def _print(node: Node) -> str:
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({_print(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(_print(node.operand), _precedence(node.operand) < _PRECEDENCE["neg"])
    level = _PRECEDENCE[node.op]
    left, right = _print(node.left), _print(node.right)
    if node.op == "^":
        return f"{_wrap(left, _precedence(node.left) <= level)}^{_wrap(right, _precedence(node.right) < _PRECEDENCE['neg'])}"
    return f"{_wrap(left, _precedence(node.left) < level)}{node.op}{_wrap(right, _precedence(node.right) <= level)}"


def to_source(expr: Expr) -> str:
    """Render ``expr`` back to source text that parses to the same tree."""

    return _print(expr.root)


__all__ = [
    "FUNCTIONS",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "Node",
    "Expr",
    "Token",
    "tokenize",
    "Parser",
    "parse",
    "evaluate",
    "free_vars",
    "y_variables",
    "is_constant",
    "to_source",
]
