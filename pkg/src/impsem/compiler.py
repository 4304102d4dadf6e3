"""Non-optimizing compiler from IMP commands to stack-machine code.

Branch offsets are computed from the lengths of already-compiled
sub-sequences; nothing is patched after the fact.
"""

from __future__ import annotations

from .syntax import Add, Assert, Assign, Const, Eq, If, Lt, Seq, Skip, Sub, Var, While
from .vm import BRANCHES, IAdd, IBge, IBne, IBranch, IConst, IHalt, ISetvar, ISub, IVar


def compile_expr(e) -> list:
    """Postfix code pushing the value of ``e``."""
    match e:
        case Var(x):
            return [IVar(x)]
        case Const(n):
            return [IConst(n)]
        case Add(l, r):
            return compile_expr(l) + compile_expr(r) + [IAdd()]
        case Sub(l, r):
            return compile_expr(l) + compile_expr(r) + [ISub()]
    raise TypeError(f"not a program expression: {e!r}")


def compile_bool(b, offset: int) -> list:
    """Code that falls through when ``b`` holds and skips ``offset`` otherwise."""
    match b:
        case Eq(l, r):
            return compile_expr(l) + compile_expr(r) + [IBne(offset)]
        case Lt(l, r):
            return compile_expr(l) + compile_expr(r) + [IBge(offset)]
    raise TypeError(f"not a condition: {b!r}")


def compile_cmd(c) -> list:
    match c:
        case Skip():
            return []
        case Assign(x, e):
            return compile_expr(e) + [ISetvar(x)]
        case Seq(c1, c2):
            return compile_cmd(c1) + compile_cmd(c2)
        case If(b, c1, c2):
            code1 = compile_cmd(c1)
            code2 = compile_cmd(c2)
            return compile_bool(b, len(code1) + 1) + code1 + [IBranch(len(code2))] + code2
        case While(b, body, _, _):
            code = compile_cmd(body)
            test = compile_bool(b, len(code) + 1)
            return test + code + [IBranch(-(len(test) + len(code) + 1))]
        case Assert():
            raise TypeError("erase annotated commands before compiling them")
    raise TypeError(f"not a command: {c!r}")


def compile_program(c) -> list:
    return compile_cmd(c) + [IHalt()]


def branch_targets(code) -> list[tuple[int, int]]:
    """``(pc, target)`` for every branch instruction in ``code``."""
    return [(pc, pc + 1 + ins.offset) for pc, ins in enumerate(code) if isinstance(ins, BRANCHES)]
