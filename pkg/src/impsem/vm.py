"""A small stack machine: instructions, transition function and executor.

Branch offsets are relative to the *next* instruction: a taken branch at
``pc`` with offset ``d`` continues at ``pc + 1 + d``. Binary instructions
pop ``n2`` (top of stack) and then ``n1``; ``sub`` pushes ``n1 - n2``,
``bne`` jumps when ``n1 != n2`` and ``bge`` jumps when ``n1 >= n2``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .semantics import State, normalize
from .syntax import is_ident


@dataclass(frozen=True)
class IConst:
    value: int


@dataclass(frozen=True)
class IVar:
    name: str


@dataclass(frozen=True)
class ISetvar:
    name: str


@dataclass(frozen=True)
class IAdd:
    pass


@dataclass(frozen=True)
class ISub:
    pass


@dataclass(frozen=True)
class IBranch:
    offset: int


@dataclass(frozen=True)
class IBne:
    offset: int


@dataclass(frozen=True)
class IBge:
    offset: int


@dataclass(frozen=True)
class IHalt:
    pass


Instr = Union[IConst, IVar, ISetvar, IAdd, ISub, IBranch, IBne, IBge, IHalt]
Code = Sequence[Instr]

BRANCHES = (IBranch, IBne, IBge)


@dataclass(frozen=True)
class MachineState:
    pc: int
    stack: tuple = ()  # top of stack first
    store: State = field(default_factory=State)


def vm_step(code: Code, m: MachineState, wrap32: bool = False) -> Optional[MachineState]:
    """The successor of ``m``, or ``None`` (bad pc, halt, stack underflow)."""
    pc, stack, s = m.pc, m.stack, m.store
    if not 0 <= pc < len(code):
        return None
    ins = code[pc]
    match ins:
        case IConst(n):
            return MachineState(pc + 1, ((normalize(n) if wrap32 else n),) + stack, s)
        case IVar(x):
            return MachineState(pc + 1, (s.lookup(x),) + stack, s)
        case ISetvar(x):
            if not stack:
                return None
            return MachineState(pc + 1, stack[1:], s.update(x, stack[0]))
        case IBranch(d):
            return MachineState(pc + 1 + d, stack, s)
        case IHalt():
            return None
    if len(stack) < 2:
        return None
    n2, n1, rest = stack[0], stack[1], stack[2:]
    match ins:
        case IAdd():
            v = n1 + n2
            return MachineState(pc + 1, ((normalize(v) if wrap32 else v),) + rest, s)
        case ISub():
            v = n1 - n2
            return MachineState(pc + 1, ((normalize(v) if wrap32 else v),) + rest, s)
        case IBne(d):
            return MachineState(pc + 1 + d if n1 != n2 else pc + 1, rest, s)
        case IBge(d):
            return MachineState(pc + 1 + d if n1 >= n2 else pc + 1, rest, s)
    raise TypeError(f"not an instruction: {ins!r}")


@dataclass(frozen=True)
class VmHalted:
    store: State
    steps: int
    final: MachineState


@dataclass(frozen=True)
class VmStuck:
    reason: str  # "BadPc" or "StackUnderflow"
    at: MachineState
    steps: int


@dataclass(frozen=True)
class VmOutOfFuel:
    at: MachineState
    steps: int


VmOutcome = Union[VmHalted, VmStuck, VmOutOfFuel]


@dataclass
class VmRun:
    outcome: VmOutcome
    trace: list


def vm_run(code: Code, m0: MachineState, fuel: int, trace: bool = False, wrap32: bool = False):
    """Run at most ``fuel`` transitions from ``m0``.

    Returns the :class:`VmOutcome`, or a :class:`VmRun` with every visited
    machine state when ``trace`` is set.
    """
    if fuel < 0:
        raise ValueError("fuel must be nonnegative")
    code = tuple(code)
    m = m0
    visited = [m] if trace else None
    steps = 0
    while True:
        if 0 <= m.pc < len(code) and isinstance(code[m.pc], IHalt):
            outcome = VmHalted(m.store, steps, m)
            break
        if steps >= fuel:
            outcome = VmOutOfFuel(m, steps)
            break
        nxt = vm_step(code, m, wrap32)
        if nxt is None:
            reason = "BadPc" if not 0 <= m.pc < len(code) else "StackUnderflow"
            outcome = VmStuck(reason, m, steps)
            break
        m = nxt
        steps += 1
        if trace:
            visited.append(m)
    return VmRun(outcome, visited) if trace else outcome


def vm_trace_records(states: Sequence[MachineState]) -> list[dict]:
    out = []
    prev = None
    for i, m in enumerate(states):
        changed = m.store.bindings if prev is None else prev.store.diff(m.store)
        out.append({"step": i, "pc": m.pc, "stack": list(m.stack), "changed": changed})
        prev = m
    return out


# ---------------------------------------------------------------- text format


def format_instr(ins: Instr) -> str:
    match ins:
        case IConst(n):
            return f"const {n}"
        case IVar(x):
            return f"var {x}"
        case ISetvar(x):
            return f"setvar {x}"
        case IAdd():
            return "add"
        case ISub():
            return "sub"
        case IBranch(d):
            return f"branch {d}"
        case IBne(d):
            return f"bne {d}"
        case IBge(d):
            return f"bge {d}"
        case IHalt():
            return "halt"
    raise TypeError(f"not an instruction: {ins!r}")


def format_code(code: Code) -> str:
    return "".join(format_instr(i) + "\n" for i in code)


class CodeSyntaxError(ValueError):
    pass


_NULLARY = {"add": IAdd, "sub": ISub, "halt": IHalt}
_INT_ARG = {"const": IConst, "branch": IBranch, "bne": IBne, "bge": IBge}
_NAME_ARG = {"var": IVar, "setvar": ISetvar}
_INT_RE = re.compile(r"[+-]?[0-9]+\Z")


def parse_code(text: str) -> list[Instr]:
    """Parse the one-instruction-per-line format; ``#`` starts a comment."""
    code = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        words = raw.split("#", 1)[0].split()
        if not words:
            continue
        op, args = words[0], words[1:]
        if op in _NULLARY and not args:
            code.append(_NULLARY[op]())
        elif op in _INT_ARG and len(args) == 1 and _INT_RE.match(args[0]):
            code.append(_INT_ARG[op](int(args[0])))
        elif op in _NAME_ARG and len(args) == 1 and is_ident(args[0]):
            code.append(_NAME_ARG[op](args[0]))
        else:
            raise CodeSyntaxError(f"line {lineno}: cannot parse {raw.strip()!r}")
    return code
