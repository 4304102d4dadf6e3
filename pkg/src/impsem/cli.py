"""Command-line entry point: ``impsem <subcommand> ...``.

Exit status is 0 on success, 1 when a check fails (counterexample, campaign
failure, stuck or out-of-fuel run) and 2 on usage or parse errors.
Machine-readable output goes to stdout or the named file; diagnostics go to
stderr. Set ``IMP_COLOR=0`` to disable ANSI styling.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

from . import difftest
from .compiler import compile_program
from .hoare import BudgetExceeded, export_smtlib, termination_vcs, vc_report, vcgen
from .optim import dce, live
from .parser import ParseError, parse_triple, pretty_print
from .semantics import (
    MATH, STRICT, WRAP32, BOTTOM, Discrepancy, GoesWrong, OutOfFuel, State, Terminated,
    Value, Wrong, classify, interp, run_small_step, trace_records,
)
from .syntax import erase, ghosts_assertion, is_ident
from .vm import CodeSyntaxError, MachineState, VmHalted, VmOutOfFuel, parse_code, vm_run, vm_trace_records

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_MODES = {"math": MATH, "wrap32": WRAP32, "strict": STRICT}


class UsageError(Exception):
    pass


def _color_enabled(stream) -> bool:
    if os.environ.get("IMP_COLOR") == "0":
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def _style(text: str, code: str, stream=None) -> str:
    stream = stream or sys.stdout
    return f"\x1b[{code}m{text}\x1b[0m" if _color_enabled(stream) else text


def _error(msg: str) -> None:
    print(f"{_style('error:', '31;1', sys.stderr)} {msg}", file=sys.stderr)


def parse_store(text: Optional[str]) -> dict[str, int]:
    """``"a=13,b=-5"`` to ``{"a": 13, "b": -5}``."""
    store: dict[str, int] = {}
    if not text:
        return store
    for item in text.split(","):
        name, sep, value = item.strip().partition("=")
        name = name.strip()
        if not sep or not is_ident(name):
            raise UsageError(f"bad --store entry {item!r}; expected name=integer")
        try:
            store[name] = int(value.strip())
        except ValueError:
            raise UsageError(f"bad --store value in {item!r}") from None
    return store


def parse_vars(text: str) -> list[str]:
    names = [x.strip() for x in text.split(",") if x.strip()]
    for x in names:
        if not is_ident(x):
            raise UsageError(f"not an identifier: {x!r}")
    return names


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load_triple(path: str):
    source = _read(path)
    try:
        return parse_triple(source)
    except ParseError as exc:
        raise UsageError(f"{path}:{exc.line}:{exc.col}: {exc.message}") from None


def _write(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _bindings(s: State) -> str:
    return " ".join(f"{k}={s.lookup(k)}" for k in s.names())


# ---------------------------------------------------------------- subcommands


def cmd_run(args) -> int:
    triple = _load_triple(args.file)
    c = erase(triple.cmd)
    mode = _MODES[args.mode]
    store = parse_store(args.store)
    s = State(store, default=None) if mode is STRICT else State(store)
    if args.trace:
        run = run_small_step(c, s, args.fuel, mode, trace=True)
        for rec in trace_records(run.trace):
            print(json.dumps(rec))
    if args.engine == "interp":
        r = interp(args.fuel, c, s, mode)
        if isinstance(r, Value):
            print(_bindings(r.state))
            return EXIT_OK
        if isinstance(r, Wrong):
            _error(f"execution went wrong: {r.reason}")
        else:
            _error(f"out of fuel after depth {args.fuel}")
        return EXIT_FAIL
    if args.engine == "smallstep":
        outcome = run_small_step(c, s, args.fuel, mode)
    else:
        try:
            outcome = classify(c, s, args.fuel, mode)
        except Discrepancy as exc:
            _error(str(exc))
            return EXIT_FAIL
    match outcome:
        case Terminated(state=final):
            print(_bindings(final))
            return EXIT_OK
        case GoesWrong(reason=reason):
            _error(f"execution went wrong: {reason}")
        case OutOfFuel(steps=steps):
            _error(f"out of fuel after {steps} steps")
    return EXIT_FAIL


def cmd_compile(args) -> int:
    from .vm import format_code

    triple = _load_triple(args.file)
    _write(args.output, format_code(compile_program(erase(triple.cmd))))
    return EXIT_OK


def cmd_vm_run(args) -> int:
    text = _read(args.codefile)
    try:
        code = parse_code(text)
    except CodeSyntaxError as exc:
        raise UsageError(f"{args.codefile}: {exc}") from None
    m0 = MachineState(0, (), State(parse_store(args.store)))
    result = vm_run(code, m0, args.fuel, trace=args.trace)
    outcome = result.outcome if args.trace else result
    if args.trace:
        for rec in vm_trace_records(result.trace):
            print(json.dumps(rec))
    if isinstance(outcome, VmHalted):
        print(_bindings(outcome.store))
        return EXIT_OK
    if isinstance(outcome, VmOutOfFuel):
        _error(f"out of fuel at pc {outcome.at.pc} after {outcome.steps} steps")
    else:
        _error(f"machine stuck ({outcome.reason}) at pc {outcome.at.pc}")
    return EXIT_FAIL


def cmd_vcgen(args) -> int:
    triple = _load_triple(args.file)
    vcs = vcgen(triple.pre, triple.cmd, triple.post)
    if args.termination:
        avoid = ghosts_assertion(triple.pre) | ghosts_assertion(triple.post)
        vcs = vcs + termination_vcs(triple.cmd, avoid=sorted(avoid))
    if args.smtlib:
        _write(args.smtlib, export_smtlib(vcs))
    box = None if args.no_check else args.box
    try:
        records = vc_report(vcs, box, args.budget)
    except BudgetExceeded as exc:
        _error(str(exc))
        return EXIT_USAGE
    failed = False
    for i, rec in enumerate(records, 1):
        status = rec["status"]
        if status == "counterexample":
            failed = True
            shown = _style(status, "31;1")
            valuation = ", ".join(f"{k}={v}" for k, v in rec["valuation"].items())
            shown += f" [{valuation}]"
        elif status == "valid-in-box":
            shown = _style(status, "32")
        else:
            shown = status
        print(f"VC {i} ({rec['origin']}): {shown}")
        print(f"  {rec['formula']}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_dce(args) -> int:
    triple = _load_triple(args.file)
    c = erase(triple.cmd)
    after = parse_vars(args.live)
    live_in = sorted(live(c, after))
    print("live-in: {" + ", ".join(live_in) + "}")
    print(pretty_print(dce(c, after), indent=args.indent))
    return EXIT_OK


def cmd_difftest(args) -> int:
    cfg = difftest.GenConfig(seed=args.seed, max_depth=args.max_depth,
                             loop_probability=args.loop_probability)
    if args.campaign == "semantics":
        report = difftest.check_semantics_agreement(cfg, args.cases, args.fuel)
    elif args.campaign == "compiler":
        report = difftest.check_compiler(cfg, args.cases, args.fuel, args.vm_fuel)
    elif args.campaign == "dce":
        report = difftest.check_dce(cfg, args.cases, args.fuel, args.live_out_samples)
    else:
        entries = None
        if args.files:
            entries = [(os.path.basename(p).rsplit(".", 1)[0], _load_triple(p)) for p in args.files]
        report = difftest.check_hoare(entries, args.box, args.samples, args.fuel, args.seed)
    _write(args.output, difftest.report_json(report))
    return EXIT_FAIL if report["failed"] else EXIT_OK


# --------------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="impsem", description="IMP semantics, verification and compilation toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="execute a program")
    r.add_argument("file")
    r.add_argument("--fuel", type=_nonneg, default=difftest.DEFAULT_FUEL)
    r.add_argument("--mode", choices=sorted(_MODES), default="math")
    r.add_argument("--engine", choices=["interp", "smallstep", "both"], default="interp")
    r.add_argument("--store", help="initial bindings k=v,...; unlisted variables are 0")
    r.add_argument("--trace", action="store_true", help="print small-step records as JSON lines")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compile", help="emit stack-machine code")
    c.add_argument("file")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_compile)

    v = sub.add_parser("vm-run", help="execute stack-machine code")
    v.add_argument("codefile")
    v.add_argument("--store")
    v.add_argument("--fuel", type=_nonneg, default=difftest.DEFAULT_VM_FUEL)
    v.add_argument("--trace", action="store_true")
    v.set_defaults(func=cmd_vm_run)

    g = sub.add_parser("vcgen", help="generate and check verification conditions")
    g.add_argument("file")
    g.add_argument("--box", type=_nonneg, default=8, help="search counterexamples in [-B, B]")
    g.add_argument("--no-check", action="store_true", help="skip the box search")
    g.add_argument("--budget", type=_nonneg, default=10 ** 7)
    g.add_argument("--smtlib", metavar="OUT")
    g.add_argument("--termination", action="store_true", help="add VCs for loop measures")
    g.set_defaults(func=cmd_vcgen)

    d = sub.add_parser("dce", help="dead-code elimination")
    d.add_argument("file")
    d.add_argument("--live", required=True, help="live-out variables, comma separated")
    d.add_argument("--indent", type=_nonneg)
    d.set_defaults(func=cmd_dce)

    t = sub.add_parser("difftest", help="run a cross-checking campaign")
    t.add_argument("campaign", choices=["semantics", "compiler", "dce", "hoare"])
    t.add_argument("--seed", type=_nonneg, default=0)
    t.add_argument("--cases", type=_nonneg, default=500)
    t.add_argument("--fuel", type=_nonneg, default=difftest.DEFAULT_FUEL)
    t.add_argument("--vm-fuel", type=_nonneg, default=difftest.DEFAULT_VM_FUEL)
    t.add_argument("--max-depth", type=int, default=GEN_DEFAULTS.max_depth)
    t.add_argument("--loop-probability", type=float, default=GEN_DEFAULTS.loop_probability)
    t.add_argument("--live-out-samples", type=_nonneg, default=3)
    t.add_argument("--box", type=_nonneg, default=8)
    t.add_argument("--samples", type=_nonneg, default=200)
    t.add_argument("--files", nargs="*", help="annotated programs (default: bundled corpus)")
    t.add_argument("-o", "--output")
    t.set_defaults(func=cmd_difftest)
    return p


GEN_DEFAULTS = difftest.GenConfig()


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        _error(str(exc))
        return EXIT_USAGE
    except ValueError as exc:
        # invalid generator settings and similar
        _error(str(exc))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
