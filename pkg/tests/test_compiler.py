import random

import pytest
from hypothesis import given, strategies as st

from impsem.compiler import branch_targets, compile_bool, compile_cmd, compile_expr, compile_program
from impsem.difftest import random_code
from impsem.parser import parse_bool, parse_expr, parse_program
from impsem.semantics import BOTTOM, State, Value, eval_bool, eval_expr, interp
from impsem.syntax import SKIP, Const, Var, cmd_size
from impsem.vm import (
    BRANCHES, IAdd, IBge, IBne, IBranch, IConst, IHalt, ISetvar, ISub, IVar, MachineState,
    VmHalted, VmOutOfFuel, vm_run, vm_step,
)

from strategies import VARS, cmds, conds, exprs, full_states

pads = st.integers(0, 2**32).map(lambda seed: random_code(random.Random(seed), random.Random(seed).randint(0, 6), VARS))
stacks = st.lists(st.integers(-9, 9), max_size=4).map(tuple)


def leaves_and_ops(e):
    if isinstance(e, (Var, Const)):
        return 1
    return 1 + leaves_and_ops(e.left) + leaves_and_ops(e.right)


@pytest.mark.parametrize("src, code", [
    ("x + 1", [IVar("x"), IConst(1), IAdd()]),
    ("7", [IConst(7)]),
    ("(a - b) + c", [IVar("a"), IVar("b"), ISub(), IVar("c"), IAdd()]),
])
def test_compile_expr_examples(src, code):
    assert compile_expr(parse_expr(src)) == code


@given(exprs)
def test_compile_expr_shape(e):
    code = compile_expr(e)
    assert len(code) == leaves_and_ops(e)
    assert not any(isinstance(i, BRANCHES) for i in code)


def test_compile_bool_examples():
    assert compile_bool(parse_bool("a = b"), 4) == [IVar("a"), IVar("b"), IBne(4)]
    assert compile_bool(parse_bool("x < 5"), 3) == [IVar("x"), IConst(5), IBge(3)]
    code = compile_bool(parse_bool("0 < 1"), 1) + [IHalt(), IHalt()]
    assert vm_step(code, vm_step(code, vm_step(code, MachineState(0)))).pc == 3


@pytest.mark.parametrize("src, code", [
    ("skip", []),
    ("x := x + 1", [IVar("x"), IConst(1), IAdd(), ISetvar("x")]),
    ("while x < y do skip done", [IVar("x"), IVar("y"), IBge(1), IBranch(-4)]),
    ("if x = y then x := 1 else x := 2 end",
     [IVar("x"), IVar("y"), IBne(3), IConst(1), ISetvar("x"), IBranch(2), IConst(2), ISetvar("x")]),
])
def test_compile_cmd_examples(src, code):
    assert compile_cmd(parse_program(src)) == code


def test_compile_program_examples(euclid):
    assert compile_program(SKIP) == [IHalt()]
    out = vm_run(compile_program(euclid), MachineState(0, (), State({"a": 13, "b": 5})), 10_000)
    assert isinstance(out, VmHalted)
    assert (out.store.lookup("q"), out.store.lookup("r")) == (2, 3)


def test_assert_must_be_erased():
    c = parse_program("assert { x > 0 }")
    with pytest.raises(TypeError):
        compile_cmd(c)


@given(cmds)
def test_single_trailing_halt(c):
    code = compile_program(c)
    assert isinstance(code[-1], IHalt)
    assert sum(isinstance(i, IHalt) for i in code) == 1


@given(cmds)
def test_branch_targets_in_range(c):
    code = compile_program(c)
    assert all(0 <= t <= len(code) for _, t in branch_targets(code))


def run_exactly(code, m, n):
    for _ in range(n):
        m = vm_step(code, m)
        assert m is not None
    return m


@given(pads, pads, stacks, full_states, exprs)
def test_expr_lemma(c1, c2, sigma, s, e):
    ce = compile_expr(e)
    m = run_exactly(c1 + ce + c2, MachineState(len(c1), sigma, s), len(ce))
    assert m == MachineState(len(c1) + len(ce), (eval_expr(s, e),) + sigma, s)


@given(pads, pads, stacks, full_states, conds, st.integers(-8, 8))
def test_bool_lemma(c1, c2, sigma, s, b, delta):
    cb = compile_bool(b, delta)
    m = run_exactly(c1 + cb + c2, MachineState(len(c1), sigma, s), len(cb))
    end = len(c1) + len(cb)
    assert m == MachineState(end if eval_bool(s, b) else end + delta, sigma, s)


@given(pads, pads, stacks, full_states, cmds)
def test_cmd_forward_simulation(c1, c2, sigma, s, c):
    r = interp(200, c, s)
    if not isinstance(r, Value):
        return
    cc = compile_cmd(c)
    code, end = c1 + cc + c2, len(c1) + len(cc)
    m = MachineState(len(c1), sigma, s)
    for _ in range(100_000):
        if m.pc == end:
            break
        m = vm_step(code, m)
    assert m == MachineState(end, sigma, r.state)


@given(cmds, full_states)
def test_program_agrees_with_interp(c, s):
    r = interp(300, c, s)
    out = vm_run(compile_program(c), MachineState(0, (), s), 50_000)
    if isinstance(r, Value):
        assert isinstance(out, VmHalted) and out.store == r.state
    if isinstance(out, VmHalted):
        # every equation the interpreter unfolds is an executed instruction or a syntax node
        assert interp(out.steps + cmd_size(c) + 1, c, s) == Value(out.store)


@pytest.mark.parametrize("src", [
    "while 0 < 1 do skip done",
    "x := 0; while x < 1 do x := x - 1 done",
    "while x = x do if x < 3 then x := x + 1 else x := 0 end done",
])
def test_divergence_preserved(src):
    c = parse_program(src)
    for n in (10, 100, 1000):
        assert interp(n, c, State()) is BOTTOM
        out = vm_run(compile_program(c), MachineState(0, (), State()), 20 * n)
        assert isinstance(out, VmOutOfFuel)
