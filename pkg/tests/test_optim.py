import pytest
from hypothesis import assume, given, strategies as st

from impsem.optim import agree, dce, fixpoint, live
from impsem.parser import parse_program, pretty_print
from impsem.semantics import BOTTOM, State, Value, interp
from impsem.syntax import (
    SKIP, Assign, Const, If, Lt, Seq, Skip, Var, While, cmd_size, free_vars_bool, free_vars_cmd,
    free_vars_expr,
)

from conftest import EUCLID
from strategies import VARS, cmds, conds, exprs, full_states, names, small_ints

var_sets = st.sets(st.sampled_from(VARS)).map(frozenset)
loops = st.builds(While, conds, cmds)


# ---------------------------------------------------------------- fixpoint


def test_fixpoint_examples():
    assert fixpoint(lambda x: x | {"a"}, {"z"}, 5) == {"a"}
    assert fixpoint(lambda x: frozenset(), {"z"}, 5) == frozenset()


def test_fixpoint_oscillation_falls_back_to_default():
    calls = []

    def flip(x):
        calls.append(x)
        return frozenset({"y"}) if x == {"x"} else frozenset({"x"})

    assert fixpoint(flip, {"x", "y"}, 5) == {"x", "y"}
    assert len(calls) == 6  # n = 0 .. 5


def test_fixpoint_bound_must_be_positive():
    with pytest.raises(ValueError):
        fixpoint(lambda x: x, set(), 0)


def test_fixpoint_stops_at_first_post_fixpoint():
    # chain {} -> {1} -> {1,2} -> {1,2,3} -> stable
    f = lambda x: frozenset(range(1, min(len(x) + 2, 4)))  # noqa: E731
    assert fixpoint(f, set(), 10) == {1, 2, 3}
    assert fixpoint(f, {"d"}, 2) == {"d"}


# -------------------------------------------------------------------- live


def test_live_examples(euclid):
    a = frozenset({"p", "q"})
    assert live(SKIP, a) == a
    assert live(Assign("q", Var("z")), a) == {"p", "z"}
    assert live(Assign("w", Var("z")), a) == a
    assert live(euclid, {"q"}) == {"a", "b"}


def test_live_euclid_loop_by_hand(euclid):
    loop = euclid.second.second
    assert live(loop, {"q"}) == {"q", "b", "r"}


@given(loops, var_sets)
def test_live_while_charact(c, a):
    a2 = live(c, a)
    assert free_vars_bool(c.cond) <= a2
    assert a <= a2
    assert live(c.body, a2) <= a2


@given(cmds, var_sets)
def test_live_bounded_by_free_vars(c, a):
    assert live(c, a) <= a | free_vars_cmd(c)


@given(cmds, var_sets, var_sets)
def test_live_is_monotone(c, a, b):
    assert live(c, a) <= live(c, a | b)


# -------------------------------------------------------------------- dce


def test_dce_euclid(euclid):
    expected = "r := a; skip; while b < r + 1 do r := r - b; skip done"
    assert pretty_print(dce(euclid, set())) == expected
    assert dce(euclid, {"q"}) == euclid
    assert dce(SKIP, {"x"}) == SKIP


@given(cmds, var_sets)
def test_dce_never_grows(c, a):
    assert cmd_size(dce(c, a)) <= cmd_size(c)


def _removed(c, d, a):
    """Assignments turned into skip, each paired with the live-out set it was judged in."""
    match c, d:
        case Assign(), Skip():
            return [(c, a)]
        case Seq(c1, c2), Seq(d1, d2):
            return _removed(c1, d1, live(c2, a)) + _removed(c2, d2, a)
        case If(_, c1, c2), If(_, d1, d2):
            return _removed(c1, d1, a) + _removed(c2, d2, a)
        case While(_, body, _, _), While(_, dbody, _, _):
            return _removed(body, dbody, live(c, a))
    assert c == d
    return []


@given(cmds, var_sets)
def test_dce_only_removes_dead_assignments(c, a):
    for assign, out in _removed(c, dce(c, a), a):
        assert assign.target not in out


@given(cmds, full_states)
def test_dce_full_live_out_is_behavior_preserving(c, s):
    d = dce(c, set(VARS))
    assert interp(300, d, s) == interp(300, c, s)


# ------------------------------------------------------------------ agree


@given(full_states, var_sets)
def test_agree_reflexive(s, a):
    assert agree(s, s, a)


def test_agree_examples():
    s = State({"a": 1, "b": 2})
    assert agree(s, s.update("q", 7), {"a", "b"})
    assert not agree(s, s.update("a", 2), {"a"})
    assert agree(State(), State({"x": 0}), {"x"})


@given(full_states, full_states, var_sets, names, small_ints)
def test_agree_update_live(s1, s2, a, x, v):
    assume(agree(s1, s2, a - {x}))
    assert agree(s1.update(x, v), s2.update(x, v), a)


@given(full_states, full_states, var_sets, names, small_ints)
def test_agree_update_dead(s1, s2, a, x, v):
    assume(x not in a and agree(s1, s2, a))
    assert agree(s1.update(x, v), s2, a)


@given(exprs, full_states, full_states)
def test_eval_expr_agree(e, s1, s2):
    from impsem.semantics import eval_expr

    assume(agree(s1, s2, free_vars_expr(e)))
    assert eval_expr(s1, e) == eval_expr(s2, e)


def _agreeing(s, keep, other):
    out = other
    for x in keep:
        out = out.update(x, s.lookup(x))
    return out


@given(cmds, var_sets, full_states, full_states)
def test_dce_correct_terminating(c, a, s, noise):
    s1 = _agreeing(s, live(c, a), noise)
    r = interp(300, c, s)
    assume(isinstance(r, Value))
    r1 = interp(300, dce(c, a), s1)
    assert isinstance(r1, Value)
    assert agree(r.state, r1.state, a)


@given(cmds, cmds, var_sets, full_states, full_states)
def test_dce_preserves_divergence(prefix, body, a, s, noise):
    # whatever the prefix does, the trailing loop never exits
    c = Seq(prefix, While(Lt(Const(0), Const(1)), body))
    s1 = _agreeing(s, live(c, a), noise)
    fuels = (50, 200, 800)
    assert all(interp(n, c, s) is BOTTOM for n in fuels)
    assert all(interp(n, dce(c, a), s1) is BOTTOM for n in fuels)
