"""Executable semantics, verification and compilation for the IMP language."""

from .compiler import compile_bool, compile_cmd, compile_expr, compile_program
from .hoare import VC, find_counterexample, termination_vcs, vcg, vcgen, wp
from .optim import agree, dce, fixpoint, live
from .parser import ParseError, parse_assertion, parse_program, parse_triple, pretty_print
from .semantics import BOTTOM, State, Value, Wrong, classify, interp, run_small_step, step
from .vm import MachineState, vm_run, vm_step

__version__ = "0.1.0"

__all__ = [
    "BOTTOM", "VC", "MachineState", "ParseError", "State", "Value", "Wrong", "agree", "classify",
    "compile_bool", "compile_cmd", "compile_expr", "compile_program", "dce", "find_counterexample",
    "fixpoint", "interp", "live", "parse_assertion", "parse_program", "parse_triple",
    "pretty_print", "run_small_step", "step", "termination_vcs", "vcg", "vcgen", "vm_run",
    "vm_step", "wp",
]
