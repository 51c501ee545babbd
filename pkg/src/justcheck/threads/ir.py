"""Structured pseudocode IR for entry/exit protocols.

Expressions are small immutable trees.  ``Reg`` nodes denote register reads;
every occurrence is one read, performed left to right when the surrounding
statement executes.  ``And``/``Or`` short-circuit.  Plain Python ints and bools
are accepted wherever an expression is expected.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import Any, Callable


class Expr:
    """Base class of expression nodes."""


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: Any


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Reg(Expr):
    """Read of register ``base`` (or ``base<index>`` when indexed)."""

    base: str
    index: Any = None


@dataclass(frozen=True, eq=True)
class Op(Expr):
    fn: Callable
    args: tuple
    name: str = "op"


@dataclass(frozen=True, eq=True)
class And(Expr):
    args: tuple


@dataclass(frozen=True, eq=True)
class Or(Expr):
    args: tuple


@dataclass(frozen=True, eq=True)
class Not(Expr):
    arg: Any


def lift(x) -> Expr:
    return x if isinstance(x, Expr) else Const(x)


def _binop(fn, name):
    return lambda a, b: Op(fn, (lift(a), lift(b)), name)


eq = _binop(operator.eq, "==")
ne = _binop(operator.ne, "!=")
lt = _binop(operator.lt, "<")
le = _binop(operator.le, "<=")
gt = _binop(operator.gt, ">")
ge = _binop(operator.ge, ">=")
add = _binop(operator.add, "+")
sub = _binop(operator.sub, "-")
mod = _binop(operator.mod, "%")


def call(fn: Callable, *args, name: str | None = None) -> Op:
    return Op(fn, tuple(lift(a) for a in args), name or getattr(fn, "__name__", "call"))


def and_(*args) -> Expr:
    args = tuple(lift(a) for a in args)
    if not args:
        return Const(True)
    return args[0] if len(args) == 1 else And(args)


def or_(*args) -> Expr:
    args = tuple(lift(a) for a in args)
    if not args:
        return Const(False)
    return args[0] if len(args) == 1 else Or(args)


def not_(a) -> Expr:
    return Not(lift(a))


# statements

class Stmt:
    pass


@dataclass
class Write(Stmt):
    base: str
    index: Any
    value: Any


@dataclass
class Assign(Stmt):
    """``local <- expr``; a plain register read is ``Assign(x, Reg(...))``."""

    local: str
    expr: Any


@dataclass
class Await(Stmt):
    cond: Any


@dataclass
class If(Stmt):
    cond: Any
    then: list
    orelse: list = field(default_factory=list)


@dataclass
class While(Stmt):
    cond: Any
    body: list


@dataclass
class RepeatUntil(Stmt):
    body: list
    cond: Any


@dataclass
class For(Stmt):
    """``for local from start to stop`` (inclusive) stepping by +1 or -1."""

    local: str
    start: Any
    stop: Any
    body: list
    step: int = 1


@dataclass
class Label(Stmt):
    name: str


@dataclass
class Goto(Stmt):
    name: str


@dataclass
class Crit(Stmt):
    pass


def write(base: str, index, value) -> Write:
    return Write(base, index, value)


def read(local: str, base: str, index=None) -> Assign:
    return Assign(local, Reg(base, index))


def await_all(indices, cond: Callable[[int], Any]) -> list:
    """Wait for ``cond(j)`` for each ``j`` in ``indices`` in increasing order."""
    return [Await(cond(j)) for j in sorted(indices)]


@dataclass
class ThreadProgram:
    thread: int
    body: list
    name: str = ""
