"""Primitive recursive function expressions.

Holds the expression AST, the small definition language used to write
expressions down, a pretty-printer, and a direct evaluator.  The evaluator
never touches the agent machinery; it is the reference every simulation is
checked against.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

DEFAULT_STEP_BUDGET = 10**7


class PrfError(Exception):
    """Base class for expression errors."""


class ArityError(PrfError):
    def __init__(self, message: str, expected: int | None = None, found: int | None = None):
        if expected is not None and found is not None:
            message = f"{message} (expected {expected}, found {found})"
        super().__init__(message)
        self.expected = expected
        self.found = found


class PrfSyntaxError(PrfError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class UnknownNameError(PrfError):
    def __init__(self, name: str, line: int, column: int):
        super().__init__(f"unknown name {name!r} at line {line}, column {column}")
        self.name = name
        self.line = line
        self.column = column


class BudgetExhausted(PrfError):
    """Raised when the oracle uses up its reduction budget."""


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Zero:
    @property
    def arity(self) -> int:
        return 1


@dataclass(frozen=True)
class Succ:
    @property
    def arity(self) -> int:
        return 1


@dataclass(frozen=True)
class Proj:
    k: int
    i: int

    def __post_init__(self):
        if self.k < 1:
            raise ArityError(f"proj({self.k},{self.i}): arity must be positive")
        if not 1 <= self.i <= self.k:
            raise ArityError(f"proj({self.k},{self.i}): index must lie in 1..{self.k}")

    @property
    def arity(self) -> int:
        return self.k


@dataclass(frozen=True)
class Compose:
    g: "PrfExpr"
    hs: tuple["PrfExpr", ...]

    def __post_init__(self):
        object.__setattr__(self, "hs", tuple(self.hs))
        if not self.hs:
            raise ArityError("compose: at least one inner function is required")
        if self.g.arity != len(self.hs):
            raise ArityError(
                f"compose: outer function takes {self.g.arity} argument(s) "
                f"but {len(self.hs)} inner function(s) given",
                expected=self.g.arity,
                found=len(self.hs),
            )
        k = self.hs[0].arity
        for j, h in enumerate(self.hs[1:], start=2):
            if h.arity != k:
                raise ArityError(
                    f"compose: inner function {j} has a different arity than inner function 1",
                    expected=k,
                    found=h.arity,
                )

    @property
    def arity(self) -> int:
        return self.hs[0].arity


@dataclass(frozen=True)
class PrimRec:
    h: "PrfExpr"
    g: "PrfExpr"

    def __post_init__(self):
        if self.g.arity != self.h.arity + 2:
            raise ArityError(
                "primrec: step function must take two more arguments than the base function",
                expected=self.h.arity + 2,
                found=self.g.arity,
            )

    @property
    def arity(self) -> int:
        return self.h.arity + 1


PrfExpr = Union[Zero, Succ, Proj, Compose, PrimRec]


def arity(expr: PrfExpr) -> int:
    return expr.arity


def to_text(expr: PrfExpr) -> str:
    """Render ``expr`` in the definition language (inverse of :func:`parse_prf`)."""
    if isinstance(expr, Zero):
        return "zero"
    if isinstance(expr, Succ):
        return "succ"
    if isinstance(expr, Proj):
        return f"proj({expr.k},{expr.i})"
    if isinstance(expr, Compose):
        inner = ", ".join(to_text(h) for h in expr.hs)
        return f"compose({to_text(expr.g)}, [{inner}])"
    if isinstance(expr, PrimRec):
        return f"primrec({to_text(expr.h)}, {to_text(expr.g)})"
    raise TypeError(f"not an expression: {expr!r}")


def size(expr: PrfExpr) -> int:
    if isinstance(expr, Compose):
        return 1 + size(expr.g) + sum(size(h) for h in expr.hs)
    if isinstance(expr, PrimRec):
        return 1 + size(expr.h) + size(expr.g)
    return 1


# --- oracle ----------------------------------------------------------------


class _Budget:
    __slots__ = ("left",)

    def __init__(self, steps: int):
        self.left = steps

    def spend(self):
        self.left -= 1
        if self.left < 0:
            raise BudgetExhausted("oracle budget exhausted")


def eval_oracle(expr: PrfExpr, args: Sequence[int], budget: int = DEFAULT_STEP_BUDGET) -> int:
    """Evaluate ``expr`` on ``args`` by the defining equations.

    Every constructor application counts as one reduction against ``budget``.
    """
    args = tuple(int(a) for a in args)
    if len(args) != expr.arity:
        raise ArityError("wrong number of arguments", expected=expr.arity, found=len(args))
    if any(a < 0 for a in args):
        raise ValueError("arguments must be natural numbers")
    return _eval(expr, args, _Budget(budget))


def _eval(expr: PrfExpr, args: tuple[int, ...], budget: _Budget) -> int:
    budget.spend()
    if isinstance(expr, Zero):
        return 0
    if isinstance(expr, Succ):
        return args[0] + 1
    if isinstance(expr, Proj):
        return args[expr.i - 1]
    if isinstance(expr, Compose):
        ys = tuple(_eval(h, args, budget) for h in expr.hs)
        return _eval(expr.g, ys, budget)
    if isinstance(expr, PrimRec):
        xs, n = args[:-1], args[-1]
        acc = _eval(expr.h, xs, budget)
        for y in range(n):
            acc = _eval(expr.g, xs + (y, acc), budget)
        return acc
    raise TypeError(f"not an expression: {expr!r}")


# --- parser ----------------------------------------------------------------

KEYWORDS = {"zero", "succ", "proj", "compose", "primrec"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[()\[\],=;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> Iterator[Token]:
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PrfSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            yield Token(kind, m.group(), line, m.start() - line_start + 1)
        pos = m.end()
    yield Token("eof", "", line, pos - line_start + 1)


class Parser:
    def __init__(self, text: str, env: dict[str, PrfExpr] | None = None):
        self.tokens = list(tokenize(text))
        self.pos = 0
        self.env: dict[str, PrfExpr] = dict(env or {})

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tok
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.tok
        if tok.text != text or tok.kind not in ("punct", "name"):
            shown = tok.text or "end of input"
            raise PrfSyntaxError(f"expected {text!r} but found {shown!r}", tok.line, tok.column)
        return self.advance()

    def program(self) -> tuple[dict[str, PrfExpr], PrfExpr | None]:
        """Parse bindings and an optional trailing expression."""
        last: PrfExpr | None = None
        while self.tok.kind != "eof":
            if self.tok.kind == "name" and self.peek().text == "=":
                name_tok = self.advance()
                if name_tok.text in KEYWORDS:
                    raise PrfSyntaxError(
                        f"cannot rebind keyword {name_tok.text!r}", name_tok.line, name_tok.column
                    )
                if name_tok.text in self.env:
                    raise PrfSyntaxError(
                        f"name {name_tok.text!r} is already bound", name_tok.line, name_tok.column
                    )
                self.advance()
                value = self.expr()
                self.env[name_tok.text] = value
                last = value
                if self.tok.text == ";":
                    self.advance()
            else:
                last = self.expr()
                if self.tok.text == ";":
                    self.advance()
                if self.tok.kind != "eof":
                    tok = self.tok
                    raise PrfSyntaxError(
                        f"unexpected {tok.text!r} after final expression", tok.line, tok.column
                    )
                return self.env, last
        return self.env, last

    def expr(self) -> PrfExpr:
        tok = self.tok
        try:
            return self._expr()
        except ArityError as exc:
            if getattr(exc, "line", None) is None:
                exc.line, exc.column = tok.line, tok.column
                exc.args = (f"{exc.args[0]} at line {tok.line}, column {tok.column}",)
            raise

    def _expr(self) -> PrfExpr:
        tok = self.tok
        if tok.kind != "name":
            shown = tok.text or "end of input"
            raise PrfSyntaxError(f"expected an expression but found {shown!r}", tok.line, tok.column)
        self.advance()
        if tok.text == "zero":
            return Zero()
        if tok.text == "succ":
            return Succ()
        if tok.text == "proj":
            self.expect("(")
            k = self.integer()
            self.expect(",")
            i = self.integer()
            self.expect(")")
            return Proj(k, i)
        if tok.text == "compose":
            self.expect("(")
            g = self.expr()
            self.expect(",")
            self.expect("[")
            hs = [self.expr()]
            while self.tok.text == ",":
                self.advance()
                hs.append(self.expr())
            self.expect("]")
            self.expect(")")
            return Compose(g, tuple(hs))
        if tok.text == "primrec":
            self.expect("(")
            h = self.expr()
            self.expect(",")
            g = self.expr()
            self.expect(")")
            return PrimRec(h, g)
        if tok.text in self.env:
            return self.env[tok.text]
        raise UnknownNameError(tok.text, tok.line, tok.column)

    def integer(self) -> int:
        tok = self.tok
        if tok.kind != "int":
            raise PrfSyntaxError(f"expected an integer but found {tok.text!r}", tok.line, tok.column)
        self.advance()
        return int(tok.text)


def parse_program(text: str, env: dict[str, PrfExpr] | None = None) -> tuple[dict[str, PrfExpr], PrfExpr | None]:
    """Parse a definition file.

    Returns the binding environment and the trailing expression, or the value
    of the last binding when the text ends with a binding (None when empty).
    """
    return Parser(text, env).program()


def parse_prf(text: str, env: dict[str, PrfExpr] | None = None) -> PrfExpr:
    """Parse ``text`` to a single expression.

    With no trailing expression the value of the last binding is returned.
    """
    _, expr = parse_program(text, env)
    if expr is None:
        raise PrfSyntaxError("no expression found", 1, 1)
    return expr
