"""Verification conditions for annotated IMP programs.

Assertions are syntax trees (see :mod:`impsem.syntax`), which lets us
substitute into them, print them, search them for counterexamples over a
bounded box and export them to SMT-LIB.

Division inside assertions is floor division. A comparison whose evaluation
divides by zero is false; the SMT-LIB export encodes the same convention by
guarding every such comparison with ``divisor != 0``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .parser import print_assertion, print_bool
from .semantics import MATH, EvalMode, State, eval_bool
from .syntax import (
    FALSE, TRUE, AFalse, Add, And, Assert, Assign, ATrue, BFalse, BTrue, Cmp,
    Const, Div, Eq, Ghost, If, Implies, Lt, Mul, Not, Or, Seq, Skip, Sub, Var,
    While, conj, free_vars_assertion, ghosts_assertion,
)


@dataclass(frozen=True)
class VC:
    formula: object
    origin: str

    def __post_init__(self):
        if not self.origin:
            raise ValueError("a VC needs a nonempty origin")

    def __str__(self):
        return f"[{self.origin}] {print_assertion(self.formula)}"


class UnboundGhost(KeyError):
    pass


class BudgetExceeded(RuntimeError):
    pass


# ---------------------------------------------------------------- substitution


def subst_expr(a, x: str, e):
    match a:
        case Var(y):
            return e if y == x else a
        case Const() | Ghost():
            return a
        case Add(l, r):
            return Add(subst_expr(l, x, e), subst_expr(r, x, e))
        case Sub(l, r):
            return Sub(subst_expr(l, x, e), subst_expr(r, x, e))
        case Mul(l, r):
            return Mul(subst_expr(l, x, e), subst_expr(r, x, e))
        case Div(l, r):
            return Div(subst_expr(l, x, e), subst_expr(r, x, e))
    raise TypeError(f"not an expression: {a!r}")


def _subst_bool(b, x, e):
    return type(b)(subst_expr(b.left, x, e), subst_expr(b.right, x, e))


def subst(p, x: str, e):
    """``p[x <- e]``: replace every ``Var(x)`` by the program expression ``e``.

    ``e`` never contains binders, so no capture can occur; ghosts are left
    alone.
    """
    match p:
        case ATrue() | AFalse():
            return p
        case Cmp(op, l, r):
            return Cmp(op, subst_expr(l, x, e), subst_expr(r, x, e))
        case And(l, r):
            return And(subst(l, x, e), subst(r, x, e))
        case Or(l, r):
            return Or(subst(l, x, e), subst(r, x, e))
        case Implies(l, r):
            return Implies(subst(l, x, e), subst(r, x, e))
        case Not(q):
            return Not(subst(q, x, e))
        case BTrue(b):
            return BTrue(_subst_bool(b, x, e))
        case BFalse(b):
            return BFalse(_subst_bool(b, x, e))
    raise TypeError(f"not an assertion: {p!r}")


# ------------------------------------------------------------------ evaluation


class _ZeroDivisor(Exception):
    pass


def eval_aexpr(a, s: State, ghosts: Mapping[str, int]) -> int:
    match a:
        case Var(x):
            v = s.lookup(x)
            if v is None:
                raise LookupError(f"{x} is unbound")
            return v
        case Ghost(g):
            if g not in ghosts:
                raise UnboundGhost(g)
            return ghosts[g]
        case Const(n):
            return n
        case Add(l, r):
            return eval_aexpr(l, s, ghosts) + eval_aexpr(r, s, ghosts)
        case Sub(l, r):
            return eval_aexpr(l, s, ghosts) - eval_aexpr(r, s, ghosts)
        case Mul(l, r):
            return eval_aexpr(l, s, ghosts) * eval_aexpr(r, s, ghosts)
        case Div(l, r):
            n = eval_aexpr(l, s, ghosts)
            d = eval_aexpr(r, s, ghosts)
            if d == 0:
                raise _ZeroDivisor()
            return n // d
    raise TypeError(f"not an expression: {a!r}")


_CMP_FN = {
    "=": lambda a, b: a == b,
    "<>": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def eval_assertion(p, s: State, ghosts: Optional[Mapping[str, int]] = None,
                   mode: EvalMode = MATH) -> bool:
    ghosts = ghosts or {}
    match p:
        case ATrue():
            return True
        case AFalse():
            return False
        case Cmp(op, l, r):
            try:
                return _CMP_FN[op](eval_aexpr(l, s, ghosts), eval_aexpr(r, s, ghosts))
            except _ZeroDivisor:
                return False
        case And(l, r):
            return eval_assertion(l, s, ghosts, mode) and eval_assertion(r, s, ghosts, mode)
        case Or(l, r):
            return eval_assertion(l, s, ghosts, mode) or eval_assertion(r, s, ghosts, mode)
        case Implies(l, r):
            return not eval_assertion(l, s, ghosts, mode) or eval_assertion(r, s, ghosts, mode)
        case Not(q):
            return not eval_assertion(q, s, ghosts, mode)
        case BTrue(b):
            return eval_bool(s, b, mode) is True
        case BFalse(b):
            return eval_bool(s, b, mode) is False
    raise TypeError(f"not an assertion: {p!r}")


# --------------------------------------------------------- wp / vcg / vcgen


def wp(c, q):
    """Weakest liberal precondition, trusting loop invariants and asserts."""
    match c:
        case Skip():
            return q
        case Assign(x, e):
            return subst(q, x, e)
        case Seq(c1, c2):
            return wp(c1, wp(c2, q))
        case If(b, c1, c2):
            return Or(And(BTrue(b), wp(c1, q)), And(BFalse(b), wp(c2, q)))
        case While(_, _, inv, _):
            return inv
        case Assert(p):
            return p
    raise TypeError(f"not a command: {c!r}")


def vcg(c, q) -> list[VC]:
    """Side conditions under which ``{wp(c, q)} c {q}`` is derivable."""
    match c:
        case Skip() | Assign():
            return []
        case Seq(c1, c2):
            return vcg(c1, wp(c2, q)) + vcg(c2, q)
        case If(_, c1, c2):
            return vcg(c1, q) + vcg(c2, q)
        case While(b, body, inv, _):
            where = f"while {print_bool(b)}"
            return vcg(body, inv) + [
                VC(Implies(And(BFalse(b), inv), q), f"{where}: exit"),
                VC(Implies(And(BTrue(b), inv), wp(body, inv)), f"{where}: preservation"),
            ]
        case Assert(p):
            return [VC(Implies(p, q), "assert")]
    raise TypeError(f"not a command: {c!r}")


def vcgen(p, c, q) -> list[VC]:
    """All conditions whose validity makes ``{p} c {q}`` derivable."""
    return [VC(Implies(p, wp(c, q)), "precondition")] + vcg(c, q)


def _measured_loops(c):
    match c:
        case Seq(c1, c2) | If(_, c1, c2):
            yield from _measured_loops(c1)
            yield from _measured_loops(c2)
        case While(_, body, _, m):
            if m is not None:
                yield c
            yield from _measured_loops(body)


def _ghosts_cmd(c) -> set[str]:
    match c:
        case Seq(c1, c2) | If(_, c1, c2):
            return _ghosts_cmd(c1) | _ghosts_cmd(c2)
        case While(_, body, inv, _):
            return set(ghosts_assertion(inv)) | _ghosts_cmd(body)
        case Assert(p):
            return set(ghosts_assertion(p))
    return set()


def termination_vcs(c, avoid: Sequence[str] = ()) -> list[VC]:
    """Variant conditions for every loop that carries a ``measure``.

    For a loop ``while b invariant {P} measure m do body done`` and a fresh
    ghost ``v`` standing for the measure on entry to the body::

        b true && m = $v && P  ->  wp(body, 0 <= m && m < $v && P)

    together with the side conditions ``vcg(body, ...)`` for the same
    postcondition, which are empty unless the body holds loops or asserts.
    Ghosts are named ``v``, ``v1``, ``v2``, ... skipping names already used in
    ``c`` or listed in ``avoid``.
    """
    taken = _ghosts_cmd(c) | set(avoid)
    fresh = (name for name in itertools.chain(["v"], (f"v{i}" for i in itertools.count(1)))
             if name not in taken)
    out = []
    for loop in _measured_loops(c):
        v = Ghost(next(fresh))
        m, inv = loop.measure, loop.invariant
        pre = conj(BTrue(loop.cond), Cmp("=", m, v), inv)
        post = conj(Cmp("<=", Const(0), m), Cmp("<", m, v), inv)
        where = f"while {print_bool(loop.cond)}: termination"
        out.append(VC(Implies(pre, wp(loop.body, post)), where))
        out.extend(VC(vc.formula, f"{where} / {vc.origin}") for vc in vcg(loop.body, post))
    return out


# ------------------------------------------------------------------ simplify


def _has_div(a) -> bool:
    match a:
        case Div():
            return True
        case Add(l, r) | Sub(l, r) | Mul(l, r):
            return _has_div(l) or _has_div(r)
    return False


def simplify_expr(a):
    match a:
        case Add(l, r) | Sub(l, r) | Mul(l, r) | Div(l, r):
            l, r = simplify_expr(l), simplify_expr(r)
        case _:
            return a
    kind = type(a)
    if isinstance(l, Const) and isinstance(r, Const):
        if kind is Add:
            return Const(l.value + r.value)
        if kind is Sub:
            return Const(l.value - r.value)
        if kind is Mul:
            return Const(l.value * r.value)
        if r.value != 0:
            return Const(l.value // r.value)
    if kind is Add and r == Const(0):
        return l
    if kind is Add and l == Const(0):
        return r
    if kind is Sub and r == Const(0):
        return l
    if kind is Mul and r == Const(1):
        return l
    if kind is Mul and l == Const(1):
        return r
    if kind is Mul and Const(0) in (l, r) and not (_has_div(l) or _has_div(r)):
        return Const(0)
    if kind is Div and r == Const(1):
        return l
    return kind(l, r)


def _simplify_bool(b):
    return type(b)(simplify_expr(b.left), simplify_expr(b.right))


def simplify(p):
    """Constant folding plus true/false absorption; preserves meaning."""
    match p:
        case ATrue() | AFalse():
            return p
        case Cmp(op, l, r):
            l, r = simplify_expr(l), simplify_expr(r)
            if isinstance(l, Const) and isinstance(r, Const):
                return TRUE if _CMP_FN[op](l.value, r.value) else FALSE
            return Cmp(op, l, r)
        case BTrue(b) | BFalse(b):
            b = _simplify_bool(b)
            if isinstance(b.left, Const) and isinstance(b.right, Const):
                holds = eval_bool(State(), b)
                return TRUE if holds == isinstance(p, BTrue) else FALSE
            return type(p)(b)
        case Not(q):
            q = simplify(q)
            match q:
                case ATrue():
                    return FALSE
                case AFalse():
                    return TRUE
                case Not(inner):
                    return inner
                case BTrue(b):
                    return BFalse(b)
                case BFalse(b):
                    return BTrue(b)
            return Not(q)
        case And(l, r):
            l, r = simplify(l), simplify(r)
            if FALSE in (l, r):
                return FALSE
            if l == TRUE:
                return r
            if r == TRUE:
                return l
            return And(l, r)
        case Or(l, r):
            l, r = simplify(l), simplify(r)
            if TRUE in (l, r):
                return TRUE
            if l == FALSE:
                return r
            if r == FALSE:
                return l
            return Or(l, r)
        case Implies(l, r):
            l, r = simplify(l), simplify(r)
            if l == FALSE or r == TRUE:
                return TRUE
            if l == TRUE:
                return r
            if r == FALSE:
                return simplify(Not(l))
            return Implies(l, r)
    raise TypeError(f"not an assertion: {p!r}")


# ----------------------------------------------------- bounded counterexamples


def vc_variables(p) -> tuple[list[str], list[str]]:
    """Sorted program variables and sorted ghost names of an assertion."""
    return sorted(free_vars_assertion(p)), sorted(ghosts_assertion(p))


def _py_expr(a, names: Mapping[tuple, str], divisors: list) -> str:
    match a:
        case Var(x):
            return names[("var", x)]
        case Ghost(g):
            return names[("ghost", g)]
        case Const(n):
            return f"({n})"
        case Add(l, r) | Sub(l, r) | Mul(l, r):
            op = {Add: "+", Sub: "-", Mul: "*"}[type(a)]
            return f"({_py_expr(l, names, divisors)} {op} {_py_expr(r, names, divisors)})"
        case Div(l, r):
            num = _py_expr(l, names, divisors)
            den = _py_expr(r, names, divisors)
            divisors.append(den)
            return f"({num} // {den})"
    raise TypeError(f"not an expression: {a!r}")


_PY_CMP = {"=": "==", "<>": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


def _py_assertion(p, names) -> str:
    match p:
        case ATrue():
            return "True"
        case AFalse():
            return "False"
        case Cmp(op, l, r):
            divisors: list[str] = []
            left = _py_expr(l, names, divisors)
            right = _py_expr(r, names, divisors)
            # divisors come out innermost first, so "and" never divides by zero
            guards = [f"{d} != 0" for d in divisors]
            return "(" + " and ".join(guards + [f"{left} {_PY_CMP[op]} {right}"]) + ")"
        case And(l, r):
            return f"({_py_assertion(l, names)} and {_py_assertion(r, names)})"
        case Or(l, r):
            return f"({_py_assertion(l, names)} or {_py_assertion(r, names)})"
        case Implies(l, r):
            return f"((not {_py_assertion(l, names)}) or {_py_assertion(r, names)})"
        case Not(q):
            return f"(not {_py_assertion(q, names)})"
        case BTrue(b) | BFalse(b):
            op = "==" if isinstance(b, Eq) else "<"
            text = f"({_py_expr(b.left, names, [])} {op} {_py_expr(b.right, names, [])})"
            return text if isinstance(p, BTrue) else f"(not {text})"
    raise TypeError(f"not an assertion: {p!r}")


def compile_assertion(p, variables: Sequence[str], ghosts: Sequence[str] = ()):
    """Turn ``p`` into a Python function of positional integer arguments.

    Arguments are the values of ``variables`` followed by ``ghosts``. Used to
    make box enumeration fast; :func:`eval_assertion` is the reference.
    """
    names = {("var", x): f"_a{i}" for i, x in enumerate(variables)}
    names.update({("ghost", g): f"_a{len(variables) + i}" for i, g in enumerate(ghosts)})
    params = ", ".join(f"_a{i}" for i in range(len(variables) + len(ghosts)))
    source = f"lambda {params}: {_py_assertion(p, names)}"
    return eval(compile(source, "<assertion>", "eval"), {"__builtins__": {}})


def find_counterexample(vcs: Sequence[VC], box: int, budget: int = 10 ** 7):
    """Search ``[-box, box]`` for a valuation falsifying some VC.

    Each VC is enumerated over its own variables (sorted) and ghosts
    (sorted, keyed ``$name``) in lexicographic order. Returns the first
    ``(vc, valuation)`` found, or ``None``: no counterexample *in the box*,
    which is not a proof of validity. Raises :class:`BudgetExceeded` before
    doing any work if the total enumeration would exceed ``budget``.
    """
    if box < 0:
        raise ValueError("box must be nonnegative")
    plans = []
    total = 0
    for vc in vcs:
        variables, ghosts = vc_variables(vc.formula)
        k = len(variables) + len(ghosts)
        total += (2 * box + 1) ** k
        plans.append((vc, variables, ghosts))
    if total > budget:
        raise BudgetExceeded(
            f"{total} valuations needed for box {box}, budget is {budget}"
        )
    values = range(-box, box + 1)
    for vc, variables, ghosts in plans:
        check = compile_assertion(vc.formula, variables, ghosts)
        keys = variables + ["$" + g for g in ghosts]
        for point in itertools.product(values, repeat=len(keys)):
            if not check(*point):
                return vc, dict(zip(keys, point))
    return None


def split_valuation(valuation: Mapping[str, int]) -> tuple[State, dict[str, int]]:
    """Separate a counterexample into a program state and ghost values."""
    s = {k: v for k, v in valuation.items() if not k.startswith("$")}
    g = {k[1:]: v for k, v in valuation.items() if k.startswith("$")}
    return State(s), g


# --------------------------------------------------------------- SMT-LIB2


_SMT_RESERVED = frozenset(
    """and or not xor ite distinct let forall exists match par as assert
    check-sat push pop div mod abs true false Int Bool""".split()
)


def _smt_symbol(name: str) -> str:
    return f"|{name}|" if name in _SMT_RESERVED else name


def _smt_expr(a, divisors: list) -> str:
    match a:
        case Var(x):
            return _smt_symbol(x)
        case Ghost(g):
            return "$" + g
        case Const(n):
            return str(n) if n >= 0 else f"(- {-n})"
        case Add(l, r) | Sub(l, r) | Mul(l, r):
            op = {Add: "+", Sub: "-", Mul: "*"}[type(a)]
            return f"({op} {_smt_expr(l, divisors)} {_smt_expr(r, divisors)})"
        case Div(l, r):
            n = _smt_expr(l, divisors)
            d = _smt_expr(r, divisors)
            divisors.append(d)
            # SMT-LIB div is Euclidean; this is floor division
            return f"(ite (> {d} 0) (div {n} {d}) (div (- {n}) (- {d})))"
    raise TypeError(f"not an expression: {a!r}")


_SMT_CMP = {"=": "=", "<>": "distinct", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


def to_smtlib(p) -> str:
    """SMT-LIB2 term for an assertion."""
    match p:
        case ATrue():
            return "true"
        case AFalse():
            return "false"
        case Cmp(op, l, r):
            divisors: list[str] = []
            atom = f"({_SMT_CMP[op]} {_smt_expr(l, divisors)} {_smt_expr(r, divisors)})"
            if not divisors:
                return atom
            guards = " ".join(f"(distinct {d} 0)" for d in divisors)
            return f"(and {guards} {atom})"
        case And(l, r):
            return f"(and {to_smtlib(l)} {to_smtlib(r)})"
        case Or(l, r):
            return f"(or {to_smtlib(l)} {to_smtlib(r)})"
        case Implies(l, r):
            return f"(=> {to_smtlib(l)} {to_smtlib(r)})"
        case Not(q):
            return f"(not {to_smtlib(q)})"
        case BTrue(b) | BFalse(b):
            op = "=" if isinstance(b, Eq) else "<"
            atom = f"({op} {_smt_expr(b.left, [])} {_smt_expr(b.right, [])})"
            return atom if isinstance(p, BTrue) else f"(not {atom})"
    raise TypeError(f"not an assertion: {p!r}")


def export_smtlib(vcs: Sequence[VC]) -> str:
    """One script checking every VC: each block asserts its negation.

    ``unsat`` on every ``check-sat`` means every VC is valid.
    """
    variables: set[str] = set()
    ghosts: set[str] = set()
    for vc in vcs:
        vs, gs = vc_variables(vc.formula)
        variables.update(vs)
        ghosts.update(gs)
    lines = ["(set-logic NIA)"]
    lines += [f"(declare-const {_smt_symbol(x)} Int)" for x in sorted(variables)]
    lines += [f"(declare-const ${g} Int)" for g in sorted(ghosts)]
    for vc in vcs:
        lines.append(f"; {vc.origin}")
        lines.append("(push 1)")
        lines.append(f"(assert (not {to_smtlib(vc.formula)}))")
        lines.append("(check-sat)")
        lines.append("(pop 1)")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------- reporting


def vc_report(vcs: Sequence[VC], box: Optional[int] = None, budget: int = 10 ** 7) -> list[dict]:
    """Per-VC status records: valid-in-box, counterexample, or exported."""
    records = []
    for vc in vcs:
        entry = {"origin": vc.origin, "formula": print_assertion(simplify(vc.formula))}
        if box is None:
            entry["status"] = "exported"
        else:
            found = find_counterexample([vc], box, budget)
            if found is None:
                entry["status"] = "valid-in-box"
            else:
                entry["status"] = "counterexample"
                entry["valuation"] = found[1]
        records.append(entry)
    return records
