"""Evaluation of expressions and execution of commands.

Two execution engines live here and are meant to be checked against each
other: the small-step reduction relation (:func:`step`, iterated by
:func:`run_small_step`) and the fuel-bounded definitional interpreter
(:func:`interp`). :func:`classify` runs both and fails loudly if they
disagree.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator, Mapping, Optional, Union

from .syntax import (
    Add, Assert, Assign, Const, Eq, If, Lt, Seq, Skip, Sub, Var, While, SKIP,
)

INT32_MIN = -(2 ** 31)
INT32_MAX = 2 ** 31 - 1

STEP_CAP = 10 ** 6


class EvalMode(enum.Enum):
    MATH = "math"
    WRAP32 = "wrap32"
    STRICT = "strict"


MATH = EvalMode.MATH
WRAP32 = EvalMode.WRAP32
STRICT = EvalMode.STRICT


def normalize(n: int) -> int:
    """Reduce ``n`` modulo 2**32 into [-2**31, 2**31)."""
    return (n + 2 ** 31) % 2 ** 32 - 2 ** 31


class UnboundVariable(LookupError):
    pass


class State:
    """Immutable store mapping identifiers to integers.

    Unbound identifiers read as ``default``. With ``default=None`` the state
    is partial, which is what strict evaluation expects. Equality is
    extensional: bindings equal to the default are not observable.
    """

    __slots__ = ("_bindings", "default")

    def __init__(self, bindings: Optional[Mapping[str, int]] = None, default: Optional[int] = 0):
        self._bindings = dict(bindings or {})
        self.default = default

    @classmethod
    def partial(cls, bindings: Optional[Mapping[str, int]] = None) -> "State":
        return cls(bindings, default=None)

    def lookup(self, x: str) -> Optional[int]:
        return self._bindings.get(x, self.default)

    __getitem__ = lookup

    def is_bound(self, x: str) -> bool:
        return x in self._bindings

    def update(self, x: str, v: int) -> "State":
        bindings = dict(self._bindings)
        bindings[x] = v
        return State(bindings, self.default)

    @property
    def bindings(self) -> dict[str, int]:
        return dict(self._bindings)

    def names(self) -> list[str]:
        return sorted(self._bindings)

    def _canonical(self):
        if self.default is None:
            items = self._bindings.items()
        else:
            items = ((k, v) for k, v in self._bindings.items() if v != self.default)
        return self.default, frozenset(items)

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return self._canonical() == other._canonical()

    def __hash__(self):
        return hash(self._canonical())

    def __repr__(self):
        body = ", ".join(f"{k} ↦ {self._bindings[k]}" for k in sorted(self._bindings))
        return "{" + body + "}"

    def diff(self, other: "State") -> dict[str, int]:
        """Bindings of ``other`` whose observable value differs from ``self``."""
        return {
            k: other.lookup(k)
            for k in sorted(set(self._bindings) | set(other._bindings))
            if self.lookup(k) != other.lookup(k)
        }


# ------------------------------------------------------------------ expressions


def _read(s: State, x: str, mode: EvalMode) -> Optional[int]:
    v = s.lookup(x)
    if v is None and mode is not STRICT:
        raise UnboundVariable(f"{x} is unbound in a partial state ({mode.value} mode)")
    return v


def eval_expr(s: State, e, mode: EvalMode = MATH) -> Optional[int]:
    """Value of ``e`` in ``s``; ``None`` means undefined (strict mode only)."""
    match e:
        case Var(x):
            return _read(s, x, mode)
        case Const(n):
            return normalize(n) if mode is WRAP32 else n
        case Add(l, r) | Sub(l, r):
            v1 = eval_expr(s, l, mode)
            v2 = eval_expr(s, r, mode)
            if v1 is None or v2 is None:
                return None
            v = v1 + v2 if isinstance(e, Add) else v1 - v2
            return normalize(v) if mode is WRAP32 else v
    raise TypeError(f"not a program expression: {e!r}")


def eval_bool(s: State, b, mode: EvalMode = MATH) -> Optional[bool]:
    v1 = eval_expr(s, b.left, mode)
    v2 = eval_expr(s, b.right, mode)
    if v1 is None or v2 is None:
        return None
    match b:
        case Eq():
            return v1 == v2
        case Lt():
            return v1 < v2
    raise TypeError(f"not a condition: {b!r}")


# ------------------------------------------------------------------- small step


def step(c, s: State, mode: EvalMode = MATH):
    """One reduction ``(c, s) -> (c', s')``, or ``None`` if irreducible."""
    match c:
        case Assign(x, e):
            v = eval_expr(s, e, mode)
            return None if v is None else (SKIP, s.update(x, v))
        case Seq(Skip(), c2):
            return c2, s
        case Seq(c1, c2):
            r = step(c1, s, mode)
            if r is None:
                return None
            return Seq(r[0], c2), r[1]
        case If(b, c1, c2):
            v = eval_bool(s, b, mode)
            if v is None:
                return None
            return (c1 if v else c2), s
        case While(b, body, _, _):
            v = eval_bool(s, b, mode)
            if v is None:
                return None
            return (Seq(body, c), s) if v else (SKIP, s)
        case Skip():
            return None
        case Assert():
            raise TypeError("erase annotated commands before executing them")
    raise TypeError(f"not a command: {c!r}")


def redex(c):
    """The subcommand the next reduction acts on."""
    while isinstance(c, Seq) and not isinstance(c.first, Skip):
        c = c.first
    return c


@dataclass(frozen=True)
class Terminated:
    state: State
    steps: int
    engines_agree: bool = False


@dataclass(frozen=True)
class GoesWrong:
    reason: str
    at: object
    state: State
    steps: int
    engines_agree: bool = False


@dataclass(frozen=True)
class OutOfFuel:
    residual: object
    state: State
    steps: int
    engines_agree: bool = False


Outcome = Union[Terminated, GoesWrong, OutOfFuel]


@dataclass
class Run:
    outcome: Outcome
    trace: list = field(default_factory=list)


def run_small_step(c, s: State, fuel: int, mode: EvalMode = MATH, trace: bool = False):
    """Iterate :func:`step` at most ``fuel`` times.

    Returns the :class:`Outcome`, or a :class:`Run` carrying the list of
    visited configurations when ``trace`` is set.
    """
    if fuel < 0:
        raise ValueError("fuel must be nonnegative")
    configs = [(c, s)] if trace else None
    steps = 0
    while True:
        if isinstance(c, Skip):
            outcome = Terminated(s, steps)
            break
        if steps >= fuel:
            outcome = OutOfFuel(c, s, steps)
            break
        nxt = step(c, s, mode)
        if nxt is None:
            outcome = GoesWrong(f"undefined value in {type(redex(c)).__name__.lower()}", c, s, steps)
            break
        c, s = nxt
        steps += 1
        if trace:
            configs.append((c, s))
    return Run(outcome, configs) if trace else outcome


def trace_records(configs) -> Iterator[dict]:
    """Flatten a small-step trace into ``{step, command, changed}`` records."""
    from .parser import pretty_print

    prev = None
    for i, (c, s) in enumerate(configs):
        changed = s.bindings if prev is None else prev.diff(s)
        yield {"step": i, "command": pretty_print(c), "changed": changed}
        prev = s


# ------------------------------------------------------ definitional interpreter


class _Bottom:
    __slots__ = ()

    def __repr__(self):
        return "⊥"


BOTTOM = _Bottom()


@dataclass(frozen=True)
class Value:
    state: State


@dataclass(frozen=True)
class Wrong:
    """Strict-mode runtime error; distinct from running out of fuel."""

    reason: str


Res = Union[_Bottom, Value, Wrong]


def res_le(r1: Res, r2: Res) -> bool:
    """``⊥ ≤ r`` for every ``r``; otherwise only equal results are ordered."""
    return r1 is BOTTOM or r1 == r2


def interp(n: int, c, s: State, mode: EvalMode = MATH) -> Res:
    """Execute ``c`` with recursion depth bounded by ``n``.

    Every equation consumes one unit of fuel. Calls in tail position (the
    continuation of a sequence or of a loop iteration) run in a loop, so the
    Python stack only grows with the syntactic nesting of ``c``.
    """
    while True:
        if n <= 0:
            return BOTTOM
        n -= 1
        match c:
            case Skip():
                return Value(s)
            case Assign(x, e):
                v = eval_expr(s, e, mode)
                if v is None:
                    return Wrong(f"undefined value assigned to {x}")
                return Value(s.update(x, v))
            case Seq(c1, c2):
                r = interp(n, c1, s, mode)
                if not isinstance(r, Value):
                    return r
                c, s = c2, r.state
            case If(b, c1, c2):
                v = eval_bool(s, b, mode)
                if v is None:
                    return Wrong("undefined condition in if")
                c = c1 if v else c2
            case While(b, body, _, _):
                v = eval_bool(s, b, mode)
                if v is None:
                    return Wrong("undefined condition in while")
                if not v:
                    return Value(s)
                r = interp(n, body, s, mode)
                if not isinstance(r, Value):
                    return r
                s = r.state
            case Assert():
                raise TypeError("erase annotated commands before executing them")
            case _:
                raise TypeError(f"not a command: {c!r}")


# ------------------------------------------------------------------ joint report


class Discrepancy(Exception):
    def __init__(self, message: str, outcome: Outcome, result: Res):
        super().__init__(f"{message}: small-step {outcome!r}, interp {result!r}")
        self.outcome = outcome
        self.result = result


def _more_steps(c, s, outcome: Outcome, mode: EvalMode) -> Outcome:
    # resume the small-step run with doubling budgets up to STEP_CAP steps
    budget = max(outcome.steps, 1)
    while isinstance(outcome, OutOfFuel) and outcome.steps < STEP_CAP:
        budget = min(2 * budget, STEP_CAP)
        more = run_small_step(outcome.residual, outcome.state, budget - outcome.steps, mode)
        outcome = replace(more, steps=outcome.steps + more.steps)
    return outcome


def _more_fuel(c, s, fuel: int, mode: EvalMode) -> Res:
    n = max(fuel, 1)
    r = BOTTOM
    while r is BOTTOM and n < STEP_CAP:
        n = min(2 * n, STEP_CAP)
        r = interp(n, c, s, mode)
    return r


def classify(c, s: State, fuel: int, mode: EvalMode = MATH) -> Outcome:
    """Run both engines with ``fuel`` and report their common verdict.

    Fuel means recursion depth for :func:`interp` and reduction count for
    :func:`run_small_step`. When exactly one engine finishes within ``fuel``
    the other is given more (doubling, capped at ``STEP_CAP``) before the
    results are compared. Raises :class:`Discrepancy` if they disagree.
    """
    if fuel < 0:
        raise ValueError("fuel must be nonnegative")
    result = interp(fuel, c, s, mode)
    outcome = run_small_step(c, s, fuel, mode)

    if result is BOTTOM and isinstance(outcome, OutOfFuel):
        return replace(outcome, engines_agree=True)
    if result is BOTTOM:
        result = _more_fuel(c, s, fuel, mode)
    elif isinstance(outcome, OutOfFuel):
        outcome = _more_steps(c, s, outcome, mode)

    if isinstance(result, Value) and isinstance(outcome, Terminated):
        if result.state == outcome.state:
            return replace(outcome, engines_agree=True)
        raise Discrepancy("final states differ", outcome, result)
    if isinstance(result, Wrong) and isinstance(outcome, GoesWrong):
        return replace(outcome, engines_agree=True)
    raise Discrepancy("behaviors differ", outcome, result)
