"""Concrete syntax: tokenizer, recursive-descent parser and pretty-printer.

Program grammar (``//`` comments and whitespace are insignificant)::

    program  := acmd
    acmd     := item (";" item)*                  -- ";" nests to the right
    item     := "skip" | ident ":=" aexpr
              | "if" bexpr "then" acmd "else" acmd "end"
              | "while" bexpr ["invariant" "{" assertion "}"]
                              ["measure" aexpr] "do" acmd "done"
              | "assert" "{" assertion "}"
              | "(" acmd ")"                      -- grouping, for left-nested ";"
    bexpr    := aexpr ("=" | "<") aexpr
    aexpr    := term (("+" | "-") term)*
    term     := ident | ["-"] integer | "(" aexpr ")"

Assertions extend ``aexpr`` with ``*``, ``/`` and ``$ghost`` leaves and
combine comparisons (``= <> < <= > >=``) with ``!``, ``&&``, ``||`` and a
right-associative ``->``.

A source file may carry a Hoare triple's pre- and postcondition in magic
comments, ``//@ requires { P }`` and ``//@ ensures { Q }``; see
:func:`parse_triple`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

from .syntax import (
    RESERVED, TRUE, AFalse, Add, And, Assert, Assertion, ATrue, Assign, BFalse,
    BTrue, Cmp, Const, Div, Eq, Ghost, If, Implies, Lt, Mul, Not, Or, Seq,
    Skip, Sub, Var, While, ghosts_expr,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected: Iterable[str] = ()):
        self.line = line
        self.col = col
        self.expected = tuple(sorted(set(expected)))
        self.message = message
        text = f"{line}:{col}: {message}"
        if self.expected:
            text += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(text)


class Token(NamedTuple):
    kind: str  # 'ident', 'int', 'ghost', 'kw', 'sym', 'eof'
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<ghost>\$[A-Za-z_][A-Za-z0-9_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<sym>:=|<>|<=|>=|->|&&|\|\||[;(){}+\-*/=<>!])
    """,
    re.VERBOSE,
)


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "ident" and text in RESERVED:
            kind = "kw"
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, line, col))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    col = pos - line_start + 1
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Backtrack(Exception):
    pass


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("kw", "sym") and t.text in texts

    def error(self, expected: Iterable[str]) -> ParseError:
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        return ParseError(f"unexpected {found}", t.line, t.col, expected)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error([repr(text)])
        t = self.tok
        self.pos += 1
        return t

    def expect_eof(self):
        if self.tok.kind != "eof":
            raise self.error(["end of input"])

    # -- commands

    def acmd(self):
        items = [self.item()]
        while self.at(";"):
            self.pos += 1
            items.append(self.item())
        result = items[-1]
        for c in reversed(items[:-1]):
            result = Seq(c, result)
        return result

    def item(self):
        t = self.tok
        if self.at("skip"):
            self.pos += 1
            return Skip()
        if t.kind == "ident":
            self.pos += 1
            self.expect(":=")
            return Assign(t.text, self.aexpr(program=True))
        if self.at("if"):
            self.pos += 1
            b = self.bexpr()
            self.expect("then")
            c1 = self.acmd()
            self.expect("else")
            c2 = self.acmd()
            self.expect("end")
            return If(b, c1, c2)
        if self.at("while"):
            self.pos += 1
            b = self.bexpr()
            inv, measure = TRUE, None
            if self.at("invariant"):
                self.pos += 1
                self.expect("{")
                inv = self.assertion()
                self.expect("}")
            if self.at("measure"):
                mtok = self.tok
                self.pos += 1
                measure = self.aexpr(program=False)
                if ghosts_expr(measure):
                    raise ParseError("measure may not mention ghost variables",
                                     mtok.line, mtok.col)
            self.expect("do")
            body = self.acmd()
            self.expect("done")
            return While(b, body, inv, measure)
        if self.at("assert"):
            self.pos += 1
            self.expect("{")
            p = self.assertion()
            self.expect("}")
            return Assert(p)
        if self.at("("):
            self.pos += 1
            c = self.acmd()
            self.expect(")")
            return c
        raise self.error(["identifier", "'skip'", "'if'", "'while'", "'assert'", "'('"])

    def bexpr(self):
        left = self.aexpr(program=True)
        if self.at("="):
            self.pos += 1
            return Eq(left, self.aexpr(program=True))
        if self.at("<"):
            self.pos += 1
            return Lt(left, self.aexpr(program=True))
        raise self.error(["'='", "'<'", "'+'", "'-'"])

    # -- arithmetic

    def aexpr(self, program: bool):
        left = self.mul(program)
        while self.at("+", "-"):
            op = self.tok.text
            self.pos += 1
            right = self.mul(program)
            left = Add(left, right) if op == "+" else Sub(left, right)
        return left

    def mul(self, program: bool):
        left = self.term(program)
        if program:
            return left
        while self.at("*", "/"):
            op = self.tok.text
            self.pos += 1
            right = self.term(program)
            left = Mul(left, right) if op == "*" else Div(left, right)
        return left

    def term(self, program: bool):
        t = self.tok
        if t.kind == "ident":
            self.pos += 1
            return Var(t.text)
        if t.kind == "int":
            self.pos += 1
            return Const(int(t.text))
        if t.kind == "ghost" and not program:
            self.pos += 1
            return Ghost(t.text[1:])
        if self.at("-") and self.tokens[self.pos + 1].kind == "int":
            self.pos += 2
            return Const(-int(self.tokens[self.pos - 1].text))
        if self.at("("):
            self.pos += 1
            e = self.aexpr(program)
            self.expect(")")
            return e
        expected = ["identifier", "integer", "'('"]
        if not program:
            expected.append("ghost")
        raise self.error(expected)

    # -- assertions

    def assertion(self):
        left = self.disj()
        if self.at("->"):
            self.pos += 1
            return Implies(left, self.assertion())
        return left

    def disj(self):
        left = self.conj()
        if self.at("||"):
            self.pos += 1
            return Or(left, self.disj())
        return left

    def conj(self):
        left = self.neg()
        if self.at("&&"):
            self.pos += 1
            return And(left, self.conj())
        return left

    def neg(self):
        if self.at("!"):
            self.pos += 1
            return Not(self.neg())
        if self.at("true"):
            self.pos += 1
            return ATrue()
        if self.at("false"):
            self.pos += 1
            return AFalse()
        if self.at("("):
            # Either a parenthesised assertion or a comparison whose left
            # operand starts with "(": try the comparison first.
            start = self.pos
            try:
                return self.comparison(backtrack=True)
            except (_Backtrack, ParseError):
                self.pos = start
            self.pos += 1
            p = self.assertion()
            self.expect(")")
            return p
        return self.comparison(backtrack=False)

    def comparison(self, backtrack: bool):
        left = self.aexpr(program=False)
        if self.at(*_CMP):
            op = self.tok.text
            self.pos += 1
            return Cmp(op, left, self.aexpr(program=False))
        if backtrack:
            raise _Backtrack()
        raise self.error([repr(op) for op in _CMP] + ["'+'", "'-'", "'*'", "'/'"])


_CMP = ("=", "<>", "<=", ">=", "<", ">")


def parse_program(source: str):
    """Parse a (possibly annotated) program."""
    p = Parser(source)
    c = p.acmd()
    p.expect_eof()
    return c


def parse_assertion(source: str):
    p = Parser(source)
    a = p.assertion()
    p.expect_eof()
    return a


def parse_expr(source: str):
    p = Parser(source)
    e = p.aexpr(program=True)
    p.expect_eof()
    return e


def parse_bool(source: str):
    p = Parser(source)
    b = p.bexpr()
    p.expect_eof()
    return b


@dataclass(frozen=True)
class Triple:
    pre: Assertion
    cmd: object
    post: Assertion


_MAGIC_RE = re.compile(r"^\s*//@\s*(requires|ensures)\s*\{(.*)\}\s*$")


def parse_triple(source: str) -> Triple:
    """Parse a program plus its ``//@ requires``/``//@ ensures`` comments.

    Missing clauses default to ``true``.
    """
    clauses = {"requires": TRUE, "ensures": TRUE}
    for lineno, line in enumerate(source.splitlines(), 1):
        m = _MAGIC_RE.match(line)
        if m is None:
            continue
        try:
            clauses[m.group(1)] = parse_assertion(m.group(2))
        except ParseError as exc:
            offset = line.index("{") + 1
            raise ParseError(exc.message, lineno, exc.col + offset, exc.expected) from None
    return Triple(clauses["requires"], parse_program(source), clauses["ensures"])


# ------------------------------------------------------------- pretty-printing

_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2}
_OPS = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def print_expr(e, prec: int = 0) -> str:
    match e:
        case Var(x):
            return x
        case Ghost(g):
            return "$" + g
        case Const(n):
            return str(n)
        case Add(l, r) | Sub(l, r) | Mul(l, r) | Div(l, r):
            p = _PREC[type(e)]
            text = f"{print_expr(l, p)} {_OPS[type(e)]} {print_expr(r, p + 1)}"
            return f"({text})" if p < prec else text
    raise TypeError(f"not an expression: {e!r}")


def print_bool(b) -> str:
    op = "=" if isinstance(b, Eq) else "<"
    return f"{print_expr(b.left)} {op} {print_expr(b.right)}"


# assertion precedence: -> 1, || 2, && 3, ! 4, atoms 5
def print_assertion(p, prec: int = 0) -> str:
    match p:
        case ATrue():
            return "true"
        case AFalse():
            return "false"
        case Cmp(op, l, r):
            text, level = f"{print_expr(l)} {op} {print_expr(r)}", 5
        case BTrue(b):
            text, level = print_bool(b), 5
        case BFalse(b):
            text, level = f"!({print_bool(b)})", 4
        case Not(ATrue() | AFalse() | Not() as q):
            text, level = "!" + print_assertion(q), 4
        case Not(q):
            text, level = f"!({print_assertion(q)})", 4
        case And(l, r):
            text, level = f"{print_assertion(l, 4)} && {print_assertion(r, 3)}", 3
        case Or(l, r):
            text, level = f"{print_assertion(l, 3)} || {print_assertion(r, 2)}", 2
        case Implies(l, r):
            text, level = f"{print_assertion(l, 2)} -> {print_assertion(r, 1)}", 1
        case _:
            raise TypeError(f"not an assertion: {p!r}")
    return f"({text})" if level < prec else text


def _while_header(c: While) -> str:
    head = f"while {print_bool(c.cond)}"
    if c.invariant != TRUE:
        head += f" invariant {{ {print_assertion(c.invariant)} }}"
    if c.measure is not None:
        head += f" measure {print_expr(c.measure)}"
    return head


def _one_line(c) -> str:
    match c:
        case Skip():
            return "skip"
        case Assign(x, e):
            return f"{x} := {print_expr(e)}"
        case Seq(c1, c2):
            left = _one_line(c1)
            if isinstance(c1, Seq):
                left = f"({left})"
            return f"{left}; {_one_line(c2)}"
        case If(b, c1, c2):
            return f"if {print_bool(b)} then {_one_line(c1)} else {_one_line(c2)} end"
        case While(_, body, _, _):
            return f"{_while_header(c)} do {_one_line(body)} done"
        case Assert(p):
            return f"assert {{ {print_assertion(p)} }}"
    raise TypeError(f"not a command: {c!r}")


def _lines(c, pad: str, step: str) -> list[str]:
    match c:
        case Seq(c1, c2):
            if isinstance(c1, Seq):
                first = [pad + "("] + _lines(c1, pad + step, step) + [pad + ")"]
            else:
                first = _lines(c1, pad, step)
            first[-1] += ";"
            return first + _lines(c2, pad, step)
        case If(b, c1, c2):
            return (
                [f"{pad}if {print_bool(b)} then"]
                + _lines(c1, pad + step, step)
                + [pad + "else"]
                + _lines(c2, pad + step, step)
                + [pad + "end"]
            )
        case While(_, body, _, _):
            return (
                [f"{pad}{_while_header(c)} do"]
                + _lines(body, pad + step, step)
                + [pad + "done"]
            )
    return [pad + _one_line(c)]


def pretty_print(c, indent: Optional[int] = None) -> str:
    """Render a command; one line by default, indented blocks if ``indent``."""
    if indent is None:
        return _one_line(c)
    return "\n".join(_lines(c, "", " " * indent))
