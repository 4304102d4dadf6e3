import pytest
from hypothesis import given, strategies as st

from impsem.parser import (
    ParseError, parse_assertion, parse_expr, parse_program, parse_triple, pretty_print,
    print_assertion,
)
from impsem.syntax import (
    RESERVED, SKIP, TRUE, Add, And, Assert, Assign, Cmp, Const, Eq, Ghost, If, Lt, Seq,
    Skip, Sub, Var, While, erase, free_vars_bool, free_vars_cmd, free_vars_expr, is_ident,
    is_plain,
)

from conftest import EUCLID
from impsem.hoare import eval_assertion
from strategies import (
    annotated_cmds, assertions, cmds, exprs, full_states, ghost_maps, user_assertions,
)


@pytest.mark.parametrize("name", ["x", "_", "r2", "Abc_9", "whilex", "done_"])
def test_valid_idents(name):
    assert is_ident(name)


@pytest.mark.parametrize("name", ["", "9a", "a-b", "a b", "é", "$x"])
def test_invalid_idents(name):
    assert not is_ident(name)


@pytest.mark.parametrize("word", sorted(RESERVED))
def test_reserved_words_are_not_idents(word):
    assert not is_ident(word)
    with pytest.raises(ParseError):
        parse_program(f"{word} := 1")


def test_reserved_set_is_complete():
    assert RESERVED >= {"skip", "if", "then", "else", "end", "while", "do", "done",
                        "invariant", "measure", "assert", "true", "false"}


def test_parse_skip():
    assert parse_program("skip") == Skip()


def test_parse_euclid_shape():
    body = Seq(Assign("r", Sub(Var("r"), Var("b"))), Assign("q", Add(Var("q"), Const(1))))
    loop = While(Lt(Var("b"), Add(Var("r"), Const(1))), body)
    assert parse_program(EUCLID) == Seq(Assign("r", Var("a")), Seq(Assign("q", Const(0)), loop))
    assert loop.invariant == TRUE and loop.measure is None


def test_syntax_error_position():
    with pytest.raises(ParseError) as info:
        parse_program("x := ;")
    err = info.value
    assert (err.line, err.col) == (1, 6)
    assert err.expected


def test_error_on_later_line():
    with pytest.raises(ParseError) as info:
        parse_program("x := 1;\ny := 2 +\n")
    assert info.value.line in (2, 3)


@pytest.mark.parametrize("src, expected", [
    ("a - b - c", Sub(Sub(Var("a"), Var("b")), Var("c"))),
    ("a - (b - c)", Sub(Var("a"), Sub(Var("b"), Var("c")))),
    ("1 + -2", Add(Const(1), Const(-2))),
    ("x+1", Add(Var("x"), Const(1))),
])
def test_expression_parsing(src, expected):
    assert parse_expr(src) == expected


@pytest.mark.parametrize("src", [
    "x := a * b", "x := a / b", "x := $g", "while 0 < x measure $g do skip done",
    "if a = b then skip end", "x := 1;", "while a < b do skip", "x = 1",
])
def test_rejects_malformed_programs(src):
    with pytest.raises(ParseError):
        parse_program(src)


def test_comments_and_whitespace_are_ignored():
    src = "// header\nx := 1 ; // trailing\n  y := x\n"
    assert parse_program(src) == Seq(Assign("x", Const(1)), Assign("y", Var("x")))


def test_annotated_while():
    c = parse_program("while 0 < x invariant { x >= 0 } measure x do x := x - 1 done")
    assert c.invariant == Cmp(">=", Var("x"), Const(0))
    assert c.measure == Var("x")


def test_assertion_precedence():
    p = parse_assertion("a = 1 || b = 2 && c = 3 -> x > 0 -> y > 0")
    assert type(p).__name__ == "Implies"
    assert type(p.right).__name__ == "Implies"
    assert type(p.left).__name__ == "Or"
    assert isinstance(p.left.right, And)


def test_assertion_ghosts():
    assert parse_assertion("x = $x0") == Cmp("=", Var("x"), Ghost("x0"))


def test_triple_magic_comments():
    t = parse_triple("//@ requires { x >= 0 }\n//@ ensures { x = 0 }\nx := 0\n")
    assert t.pre == Cmp(">=", Var("x"), Const(0))
    assert t.post == Cmp("=", Var("x"), Const(0))
    assert parse_triple("skip").pre == TRUE


@pytest.mark.parametrize("c, text", [
    (SKIP, "skip"),
    (Assign("x", Add(Var("x"), Const(1))), "x := x + 1"),
    (parse_program("while b < r + 1 invariant { r >= 0 } do skip done"),
     "while b < r + 1 invariant { r >= 0 } do skip done"),
    (If(Eq(Var("x"), Var("y")), SKIP, SKIP), "if x = y then skip else skip end"),
])
def test_pretty_print(c, text):
    assert pretty_print(c) == text


def test_left_nested_seq_round_trip():
    c = Seq(Seq(Assign("x", Const(1)), SKIP), SKIP)
    assert parse_program(pretty_print(c)) == c


@given(annotated_cmds)
def test_round_trip(c):
    assert parse_program(pretty_print(c)) == c


@given(annotated_cmds, st.integers(1, 4))
def test_round_trip_multiline(c, indent):
    assert parse_program(pretty_print(c, indent=indent)) == c


@given(user_assertions)
def test_assertion_round_trip(p):
    assert parse_assertion(print_assertion(p)) == p


@given(assertions, full_states, ghost_maps)
def test_assertion_round_trip_preserves_meaning(p, s, g):
    # wp-only forms come back as plain comparisons with the same truth value
    assert eval_assertion(parse_assertion(print_assertion(p)), s, g) == eval_assertion(p, s, g)


def test_erase_examples():
    p = parse_assertion("x > 0")
    assert erase(Assert(p)) == SKIP
    loop = While(Lt(Var("x"), Const(3)), Assert(p), p, Var("x"))
    assert erase(loop) == While(Lt(Var("x"), Const(3)), SKIP)


@given(cmds)
def test_erase_is_identity_on_plain_programs(c):
    assert is_plain(c)
    assert erase(c) == c


@given(annotated_cmds)
def test_erase_idempotent(c):
    e = erase(c)
    assert is_plain(e)
    assert erase(e) == e


def _naive_vars(node) -> set:
    # independent traversal: Var leaves and assignment targets
    found = set()
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Var):
            found.add(n.name)
        elif isinstance(n, Assign):
            found.add(n.target)
        for f in getattr(n, "__dataclass_fields__", {}):
            stack.append(getattr(n, f))
    return found


def test_free_vars_examples():
    assert free_vars_expr(Add(Var("x"), Const(1))) == {"x"}
    assert free_vars_bool(Lt(Var("b"), Add(Var("r"), Const(1)))) == {"b", "r"}
    assert free_vars_expr(Const(5)) == frozenset()
    assert free_vars_cmd(parse_program(EUCLID)) == {"a", "b", "q", "r"}


@given(exprs)
def test_free_vars_expr_oracle(e):
    assert free_vars_expr(e) == _naive_vars(e)


@given(cmds)
def test_free_vars_cmd_oracle(c):
    assert free_vars_cmd(c) == _naive_vars(c)
