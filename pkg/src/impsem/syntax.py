"""Abstract syntax for IMP programs and for the assertion language.

Expressions, conditions and commands are frozen dataclasses, so structural
equality and hashing come for free. The assertion language reuses the
program expression nodes (``Var``, ``Const``, ``Add``, ``Sub``) and adds
``Mul``, ``Div`` and ``Ghost``; a program expression is therefore already an
assertion-level expression.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

RESERVED = frozenset(
    {
        "skip", "if", "then", "else", "end", "while", "do", "done",
        "invariant", "measure", "assert", "true", "false",
    }
)

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def is_ident(name: str) -> bool:
    return bool(_IDENT_RE.match(name)) and name not in RESERVED


def check_ident(name: str) -> str:
    if not is_ident(name):
        raise ValueError(f"not a valid identifier: {name!r}")
    return name


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "AExpr"
    right: "AExpr"


@dataclass(frozen=True)
class Div:
    """Floor division; only legal inside assertions."""

    left: "AExpr"
    right: "AExpr"


@dataclass(frozen=True)
class Ghost:
    """Logical variable, spelled ``$name`` in concrete syntax."""

    name: str


Expr = Union[Var, Const, Add, Sub]
AExpr = Union[Var, Const, Add, Sub, Mul, Div, Ghost]


# ----------------------------------------------------------------- conditions


@dataclass(frozen=True)
class Eq:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Lt:
    left: Expr
    right: Expr


BoolExpr = Union[Eq, Lt]


# ----------------------------------------------------------------- assertions


@dataclass(frozen=True)
class ATrue:
    pass


@dataclass(frozen=True)
class AFalse:
    pass


CMP_OPS = ("=", "<>", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class Cmp:
    op: str
    left: AExpr
    right: AExpr

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class And:
    left: "Assertion"
    right: "Assertion"


@dataclass(frozen=True)
class Or:
    left: "Assertion"
    right: "Assertion"


@dataclass(frozen=True)
class Implies:
    left: "Assertion"
    right: "Assertion"


@dataclass(frozen=True)
class Not:
    arg: "Assertion"


@dataclass(frozen=True)
class BTrue:
    """``b true``: the program condition evaluates to true."""

    cond: BoolExpr


@dataclass(frozen=True)
class BFalse:
    """``b false``: the program condition evaluates to false."""

    cond: BoolExpr


Assertion = Union[ATrue, AFalse, Cmp, And, Or, Implies, Not, BTrue, BFalse]

TRUE = ATrue()
FALSE = AFalse()


def conj(*parts: Assertion) -> Assertion:
    """Right-nested conjunction; the empty conjunction is ``true``."""
    if not parts:
        return TRUE
    result = parts[-1]
    for p in reversed(parts[:-1]):
        result = And(p, result)
    return result


# ------------------------------------------------------------------- commands


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr


@dataclass(frozen=True)
class Seq:
    first: "Cmd"
    second: "Cmd"


@dataclass(frozen=True)
class If:
    cond: BoolExpr
    then: "Cmd"
    orelse: "Cmd"


@dataclass(frozen=True)
class While:
    """A loop. ``invariant`` and ``measure`` are verification annotations.

    A plain (unannotated) loop carries invariant ``true`` and no measure, so
    the annotated and the plain form of a program share one representation.
    """

    cond: BoolExpr
    body: "Cmd"
    invariant: Assertion = TRUE
    measure: Optional[AExpr] = None


@dataclass(frozen=True)
class Assert:
    prop: Assertion


Cmd = Union[Skip, Assign, Seq, If, While]
AnnCmd = Union[Skip, Assign, Seq, If, While, Assert]

SKIP = Skip()


def seq(*cmds: AnnCmd) -> AnnCmd:
    """Build a right-nested sequence, the shape ``;`` parses to."""
    if not cmds:
        return SKIP
    result = cmds[-1]
    for c in reversed(cmds[:-1]):
        result = Seq(c, result)
    return result


# -------------------------------------------------------------------- erasure


def erase(c: AnnCmd) -> Cmd:
    """Drop loop annotations and turn ``assert`` into ``skip``."""
    match c:
        case Assert():
            return SKIP
        case Seq(c1, c2):
            return Seq(erase(c1), erase(c2))
        case If(b, c1, c2):
            return If(b, erase(c1), erase(c2))
        case While(b, body, _, _):
            return While(b, erase(body))
        case _:
            return c


def is_plain(c: AnnCmd) -> bool:
    """True when ``c`` carries no annotations at all."""
    return erase(c) == c


# ------------------------------------------------------------- free variables


def free_vars_expr(e: AExpr) -> frozenset[str]:
    match e:
        case Var(x):
            return frozenset({x})
        case Const() | Ghost():
            return frozenset()
        case Add(l, r) | Sub(l, r) | Mul(l, r) | Div(l, r):
            return free_vars_expr(l) | free_vars_expr(r)
    raise TypeError(f"not an expression: {e!r}")


def free_vars_bool(b: BoolExpr) -> frozenset[str]:
    return free_vars_expr(b.left) | free_vars_expr(b.right)


def free_vars_cmd(c: AnnCmd) -> frozenset[str]:
    """Variables read or assigned anywhere in ``c`` (annotations excluded)."""
    match c:
        case Skip() | Assert():
            return frozenset()
        case Assign(x, e):
            return frozenset({x}) | free_vars_expr(e)
        case Seq(c1, c2):
            return free_vars_cmd(c1) | free_vars_cmd(c2)
        case If(b, c1, c2):
            return free_vars_bool(b) | free_vars_cmd(c1) | free_vars_cmd(c2)
        case While(b, body, _, _):
            return free_vars_bool(b) | free_vars_cmd(body)
    raise TypeError(f"not a command: {c!r}")


def free_vars_assertion(p: Assertion) -> frozenset[str]:
    match p:
        case ATrue() | AFalse():
            return frozenset()
        case Cmp(_, l, r):
            return free_vars_expr(l) | free_vars_expr(r)
        case And(l, r) | Or(l, r) | Implies(l, r):
            return free_vars_assertion(l) | free_vars_assertion(r)
        case Not(q):
            return free_vars_assertion(q)
        case BTrue(b) | BFalse(b):
            return free_vars_bool(b)
    raise TypeError(f"not an assertion: {p!r}")


def ghosts_expr(e: AExpr) -> frozenset[str]:
    match e:
        case Ghost(g):
            return frozenset({g})
        case Add(l, r) | Sub(l, r) | Mul(l, r) | Div(l, r):
            return ghosts_expr(l) | ghosts_expr(r)
    return frozenset()


def ghosts_assertion(p: Assertion) -> frozenset[str]:
    match p:
        case Cmp(_, l, r):
            return ghosts_expr(l) | ghosts_expr(r)
        case And(l, r) | Or(l, r) | Implies(l, r):
            return ghosts_assertion(l) | ghosts_assertion(r)
        case Not(q):
            return ghosts_assertion(q)
    return frozenset()


def cmd_size(c: AnnCmd) -> int:
    """Number of command nodes."""
    match c:
        case Seq(c1, c2):
            return 1 + cmd_size(c1) + cmd_size(c2)
        case If(_, c1, c2):
            return 1 + cmd_size(c1) + cmd_size(c2)
        case While(_, body, _, _):
            return 1 + cmd_size(body)
    return 1


def is_program_expr(e) -> bool:
    """True for expressions built only from Var/Const/Add/Sub."""
    match e:
        case Var(x):
            return is_ident(x)
        case Const(n):
            return isinstance(n, int)
        case Add(l, r) | Sub(l, r):
            return is_program_expr(l) and is_program_expr(r)
    return False
