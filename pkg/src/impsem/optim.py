"""Liveness analysis and dead-code elimination on IMP source."""

from __future__ import annotations

from typing import Callable, Iterable

from .semantics import State
from .syntax import (
    SKIP, Assign, If, Seq, Skip, While, free_vars_bool, free_vars_cmd, free_vars_expr,
)

VarSet = frozenset


def fixpoint(f: Callable[[frozenset], frozenset], default: Iterable[str], bound: int) -> frozenset:
    """Iterate ``f`` from the empty set looking for a post-fixpoint.

    Returns ``f^n(∅)`` for the first ``n <= bound`` with ``f(f^n(∅)) ⊆ f^n(∅)``,
    and ``default`` if there is none.
    """
    if bound < 1:
        raise ValueError("bound must be at least 1")
    x = frozenset()
    for _ in range(bound + 1):
        nxt = frozenset(f(x))
        if nxt <= x:
            return x
        x = nxt
    return frozenset(default)


def live(c, after: Iterable[str]) -> frozenset:
    """Variables that may be read before being overwritten, given ``after``."""
    a = frozenset(after)
    match c:
        case Skip():
            return a
        case Assign(x, e):
            return (a - {x}) | free_vars_expr(e) if x in a else a
        case Seq(c1, c2):
            return live(c1, live(c2, a))
        case If(b, c1, c2):
            return free_vars_bool(b) | live(c1, a) | live(c2, a)
        case While(b, body, _, _):
            fv_b = free_vars_bool(b)
            return fixpoint(
                lambda x: a | fv_b | live(body, x),
                a | free_vars_cmd(c),
                len(free_vars_cmd(c) | a) + 2,
            )
    raise TypeError(f"not a command: {c!r}")


def dce(c, after: Iterable[str]):
    """Replace assignments to dead variables by ``skip``."""
    a = frozenset(after)
    match c:
        case Skip():
            return c
        case Assign(x, _):
            return c if x in a else SKIP
        case Seq(c1, c2):
            return Seq(dce(c1, live(c2, a)), dce(c2, a))
        case If(b, c1, c2):
            return If(b, dce(c1, a), dce(c2, a))
        case While(b, body, _, _):
            # the body runs again after itself, so it sees the loop's live-in set
            return While(b, dce(body, live(c, a)))
    raise TypeError(f"not a command: {c!r}")


def agree(s1: State, s2: State, variables: Iterable[str]) -> bool:
    return all(s1.lookup(x) == s2.lookup(x) for x in variables)


def sorted_vars(vs: Iterable[str]) -> list[str]:
    return sorted(vs)
