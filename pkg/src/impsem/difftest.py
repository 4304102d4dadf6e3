"""Seeded program generation and cross-checking campaigns.

Each campaign draws programs and states from a :class:`GenConfig`, runs two
independent routes (small-step vs. interpreter, interpreter vs. compiled
code, program vs. its dead-code-eliminated version, VCs vs. concrete runs)
and returns a JSON-serializable report. Reports contain no timing or other
nondeterministic data, so the same configuration reproduces the same bytes.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

from . import corpus as corpus_mod
from .compiler import compile_bool, compile_expr, compile_program
from .hoare import compile_assertion, find_counterexample, termination_vcs, vcgen
from .optim import agree, dce, live
from .parser import pretty_print
from .semantics import (
    BOTTOM, Discrepancy, GoesWrong, OutOfFuel, State, Terminated, Value, classify,
    interp, res_le, run_small_step,
)
from .syntax import (
    SKIP, Add, Assign, Const, Eq, If, Lt, Seq, Skip, Sub, Var, While, cmd_size,
    erase, free_vars_assertion, free_vars_cmd, ghosts_assertion,
)
from .vm import (
    IAdd, IBge, IBne, IBranch, IConst, IHalt, ISetvar, ISub, IVar, MachineState,
    VmHalted, VmOutOfFuel, vm_run, vm_step, vm_trace_records,
)

DEFAULT_FUEL = 2000
DEFAULT_VM_FUEL = 200_000


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    max_depth: int = 5
    var_pool: tuple = ("a", "b", "c", "d")
    const_range: tuple = (-3, 8)
    loop_probability: float = 0.25
    # share of loops built from the terminating counter pattern
    bounded_loop_share: float = 0.85

    def __post_init__(self):
        object.__setattr__(self, "var_pool", tuple(self.var_pool))
        object.__setattr__(self, "const_range", tuple(self.const_range))
        if not self.var_pool:
            raise ValueError("var_pool must be nonempty")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        lo, hi = self.const_range
        if lo > hi:
            raise ValueError("const_range is empty")
        if not 0.0 <= self.loop_probability <= 1.0:
            raise ValueError("loop_probability must lie in [0, 1]")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def for_case(self, index: int) -> "GenConfig":
        """Configuration of case ``index``: same knobs, derived seed."""
        return replace(self, seed=random.Random(f"{self.seed}/{index}").getrandbits(64))


# ------------------------------------------------------------------ generation


class _Gen:
    def __init__(self, cfg: GenConfig, rng: random.Random):
        self.cfg = cfg
        self.rng = rng

    def const(self):
        return Const(self.rng.randint(*self.cfg.const_range))

    def expr(self, depth: int):
        rng = self.rng
        if depth <= 1 or rng.random() < 0.4:
            return Var(rng.choice(self.cfg.var_pool)) if rng.random() < 0.6 else self.const()
        kind = Add if rng.random() < 0.5 else Sub
        return kind(self.expr(depth - 1), self.expr(depth - 1))

    def cond(self, depth: int):
        kind = Eq if self.rng.random() < 0.4 else Lt
        return kind(self.expr(depth), self.expr(depth))

    def cmd(self, depth: int, writable: tuple):
        rng = self.rng
        if depth <= 1 or not writable:
            if not writable or rng.random() < 0.2:
                return SKIP
            return Assign(rng.choice(writable), self.expr(2))
        if rng.random() < self.cfg.loop_probability:
            return self.loop(depth, writable)
        r = rng.random()
        if r < 0.40:
            return Seq(self.cmd(depth - 1, writable), self.cmd(depth - 1, writable))
        if r < 0.65:
            return If(self.cond(2), self.cmd(depth - 1, writable), self.cmd(depth - 1, writable))
        if r < 0.95:
            return Assign(rng.choice(writable), self.expr(3))
        return SKIP

    def loop(self, depth: int, writable: tuple):
        rng = self.rng
        if rng.random() >= self.cfg.bounded_loop_share:
            return While(self.cond(2), self.cmd(depth - 1, writable))
        counter = rng.choice(writable)
        inner = tuple(x for x in writable if x != counter)
        if rng.random() < 0.5:
            # while 0 < k do ...; k := k - 1 done
            cond = Lt(self.const() if rng.random() < 0.3 else Const(0), Var(counter))
            tick = Assign(counter, Sub(Var(counter), Const(1)))
        else:
            # while k < n do ...; k := k + 1 done, n untouched by the body
            bounds = [x for x in self.cfg.var_pool if x != counter]
            bound = Var(rng.choice(bounds)) if bounds and rng.random() < 0.7 else self.const()
            inner = tuple(x for x in inner if Var(x) != bound)
            cond = Lt(Var(counter), bound)
            tick = Assign(counter, Add(Var(counter), Const(1)))
        if depth < 3:
            return While(cond, tick)
        body = self.cmd(depth - 2, inner)
        return While(cond, Seq(body, tick) if rng.random() < 0.8 else Seq(tick, body))


def gen_program(cfg: GenConfig):
    """A random command; the same ``cfg`` always yields the same program."""
    rng = random.Random(cfg.seed)
    return _Gen(cfg, rng).cmd(cfg.max_depth, cfg.var_pool)


def gen_state(cfg: GenConfig, salt: int = 0) -> State:
    rng = random.Random(f"state/{cfg.seed}/{salt}")
    return State({x: rng.randint(*cfg.const_range) for x in cfg.var_pool})


def gen_case(cfg: GenConfig, index: int):
    case_cfg = cfg.for_case(index)
    return gen_program(case_cfg), gen_state(case_cfg)


# ------------------------------------------------------------------- shrinking


def _weight(c) -> tuple[int, int]:
    consts = 0
    for node in _walk(c):
        if isinstance(node, Const):
            consts += abs(node.value)
    return cmd_size(c) + sum(1 for n in _walk(c) if isinstance(n, (Add, Sub, Var))), consts


def _walk(node):
    yield node
    for name in getattr(node, "__dataclass_fields__", {}):
        child = getattr(node, name)
        if hasattr(child, "__dataclass_fields__"):
            yield from _walk(child)


def _expr_candidates(e):
    if e != Const(0):
        yield Const(0)
    match e:
        case Add(l, r) | Sub(l, r):
            yield l
            yield r
            for l2 in _expr_candidates(l):
                yield type(e)(l2, r)
            for r2 in _expr_candidates(r):
                yield type(e)(l, r2)


def _cond_candidates(b):
    for l2 in _expr_candidates(b.left):
        yield type(b)(l2, b.right)
    for r2 in _expr_candidates(b.right):
        yield type(b)(b.left, r2)


def _candidates(c):
    if not isinstance(c, Skip):
        yield SKIP
    match c:
        case Assign(x, e):
            for e2 in _expr_candidates(e):
                yield Assign(x, e2)
        case Seq(c1, c2):
            yield c1
            yield c2
            for d in _candidates(c1):
                yield Seq(d, c2)
            for d in _candidates(c2):
                yield Seq(c1, d)
        case If(b, c1, c2):
            yield c1
            yield c2
            for b2 in _cond_candidates(b):
                yield If(b2, c1, c2)
            for d in _candidates(c1):
                yield If(b, d, c2)
            for d in _candidates(c2):
                yield If(b, c1, d)
        case While(b, body, _, _):
            yield body
            for b2 in _cond_candidates(b):
                yield While(b2, body)
            for d in _candidates(body):
                yield While(b, d)


def shrink(c, fails: Callable[[object], bool], max_attempts: int = 20_000):
    """Greedily replace subtrees by ``skip``/``0`` while ``fails`` stays true.

    The result is locally minimal: no single candidate replacement of it
    still fails (unless ``max_attempts`` predicate calls ran out first).
    """
    attempts = 0
    improved = True
    while improved and attempts < max_attempts:
        improved = False
        w = _weight(c)
        for cand in _candidates(c):
            if _weight(cand) >= w:
                continue
            attempts += 1
            if fails(cand):
                c = cand
                improved = True
                break
            if attempts >= max_attempts:
                break
    return c


# -------------------------------------------------------------------- reports


def _report(campaign: str, cfg: GenConfig, cases: int, failures: list, **extra) -> dict:
    report = {
        "campaign": campaign,
        "cfg": asdict(cfg),
        "cases": cases,
        "passed": cases - len({f["case"] for f in failures}),
        "failed": len({f["case"] for f in failures}),
    }
    report.update(extra)
    report["failures"] = failures
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False, default=str) + "\n"


def _state_json(s: State) -> dict:
    return {k: s.lookup(k) for k in s.names()}


def _describe(x) -> str:
    match x:
        case Terminated(state=s):
            return f"terminated {_state_json(s)}"
        case OutOfFuel():
            return "out of fuel"
        case GoesWrong(reason=r):
            return f"goes wrong: {r}"
        case Value(state=s):
            return f"value {_state_json(s)}"
    return repr(x)


# ------------------------------------------------------------------ campaigns


def check_semantics_agreement(cfg: GenConfig, cases: int = 500, fuel: int = DEFAULT_FUEL,
                              programs: Optional[Sequence] = None) -> dict:
    """Small-step vs. definitional interpreter on generated programs."""
    counts = {"agree-terminated": 0, "agree-fuel-exhausted": 0, "agree-wrong": 0, "mismatch": 0}
    failures = []
    for i in range(cases):
        c, s = gen_case(cfg, i)
        if programs is not None:
            c = programs[i % len(programs)]
        try:
            outcome = classify(c, s, fuel)
        except Discrepancy as exc:
            counts["mismatch"] += 1

            def still_fails(p, s=s):
                try:
                    classify(p, s, fuel)
                except Discrepancy:
                    return True
                return False

            failures.append({
                "case": i,
                "program": pretty_print(c),
                "detail": {
                    "state": _state_json(s),
                    "small_step": _describe(exc.outcome),
                    "interp": _describe(exc.result),
                    "shrunk": pretty_print(shrink(c, still_fails)),
                },
            })
            continue
        match outcome:
            case Terminated():
                counts["agree-terminated"] += 1
            case OutOfFuel():
                counts["agree-fuel-exhausted"] += 1
            case GoesWrong():
                counts["agree-wrong"] += 1
    return _report("semantics", cfg, cases, failures, fuel=fuel, counts=counts)


def check_interp_monotonicity(cfg: GenConfig, samples: int = 1000, max_fuel: int = 60) -> dict:
    """``interp(n) ⊑ interp(m)`` for sampled ``n <= m``."""
    failures = []
    counts = {"bottom-below": 0, "equal-values": 0}
    for i in range(samples):
        c, s = gen_case(cfg, i)
        rng = random.Random(f"mono/{cfg.seed}/{i}")
        n = rng.randint(0, max_fuel)
        m = rng.randint(n, max_fuel)
        r_n, r_m = interp(n, c, s), interp(m, c, s)
        if not res_le(r_n, r_m):
            failures.append({"case": i, "program": pretty_print(c),
                             "detail": {"n": n, "m": m, "interp_n": _describe(r_n), "interp_m": _describe(r_m)}})
        elif r_n is BOTTOM:
            counts["bottom-below"] += 1
        else:
            counts["equal-values"] += 1
    return _report("monotonicity", cfg, samples, failures, max_fuel=max_fuel, counts=counts)


def check_compiler(cfg: GenConfig, cases: int = 500, fuel: int = DEFAULT_FUEL,
                   vm_fuel: int = DEFAULT_VM_FUEL) -> dict:
    """Interpreter vs. compiled code on the stack machine."""
    counts = {"agree-terminated": 0, "agree-fuel-exhausted": 0, "mismatch": 0}
    failures = []
    for i in range(cases):
        c, s = gen_case(cfg, i)
        code = compile_program(c)
        result = interp(fuel, c, s)
        out = vm_run(code, MachineState(0, (), s), vm_fuel)
        if result is BOTTOM and isinstance(out, VmHalted):
            # every equation interp unfolds is an executed instruction or a syntax node
            result = interp(out.steps + cmd_size(c) + 1, c, s)
        if isinstance(result, Value) and isinstance(out, VmHalted) and result.state == out.store:
            counts["agree-terminated"] += 1
            continue
        if result is BOTTOM and isinstance(out, VmOutOfFuel):
            counts["agree-fuel-exhausted"] += 1
            continue
        counts["mismatch"] += 1
        tail = vm_trace_records(vm_run(code, MachineState(0, (), s), vm_fuel, trace=True).trace[-10:])
        failures.append({
            "case": i,
            "program": pretty_print(c),
            "detail": {
                "state": _state_json(s),
                "interp": _describe(result),
                "vm": type(out).__name__,
                "vm_store": _state_json(out.store) if isinstance(out, VmHalted) else None,
                "vm_trace_tail": tail,
            },
        })
    return _report("compiler", cfg, cases, failures, fuel=fuel, vm_fuel=vm_fuel, counts=counts)


def random_code(rng: random.Random, length: int, var_pool: Sequence[str]) -> list:
    """Arbitrary instructions, used as never-executed padding around code."""
    makers = [
        lambda: IConst(rng.randint(-9, 9)), lambda: IVar(rng.choice(var_pool)),
        lambda: ISetvar(rng.choice(var_pool)), IAdd, ISub, IHalt,
        lambda: IBranch(rng.randint(-5, 5)), lambda: IBne(rng.randint(-5, 5)),
        lambda: IBge(rng.randint(-5, 5)),
    ]
    return [rng.choice(makers)() for _ in range(length)]


def _run_exact(code, m: MachineState, n: int) -> Optional[MachineState]:
    for _ in range(n):
        m = vm_step(code, m)
        if m is None:
            return None
    return m


def check_expr_lemma(cfg: GenConfig, samples: int = 1000) -> dict:
    """``C1; comp(e); C2`` from ``(|C1|, σ, s)`` reaches ``(|C1|+|comp e|, v.σ, s)``."""
    failures = []
    gen_rng = random.Random(f"expr-lemma/{cfg.seed}")
    gen = _Gen(cfg, gen_rng)
    for i in range(samples):
        e = gen.expr(gen_rng.randint(1, 5))
        s = gen_state(cfg, i)
        c1 = random_code(gen_rng, gen_rng.randint(0, 6), cfg.var_pool)
        c2 = random_code(gen_rng, gen_rng.randint(0, 6), cfg.var_pool)
        sigma = tuple(gen_rng.randint(-9, 9) for _ in range(gen_rng.randint(0, 4)))
        ce = compile_expr(e)
        from .semantics import eval_expr

        want = MachineState(len(c1) + len(ce), (eval_expr(s, e),) + sigma, s)
        got = _run_exact(c1 + ce + c2, MachineState(len(c1), sigma, s), len(ce))
        if got != want:
            failures.append({"case": i, "program": repr(e), "detail": {"want": repr(want), "got": repr(got)}})
    return _report("expr-lemma", cfg, samples, failures)


def check_bool_lemma(cfg: GenConfig, samples: int = 1000) -> dict:
    """Condition code falls through when true and skips ``δ`` when false."""
    from .semantics import eval_bool

    failures = []
    gen_rng = random.Random(f"bool-lemma/{cfg.seed}")
    gen = _Gen(cfg, gen_rng)
    for i in range(samples):
        b = gen.cond(gen_rng.randint(1, 4))
        delta = gen_rng.randint(-8, 8)
        s = gen_state(cfg, i)
        c1 = random_code(gen_rng, gen_rng.randint(0, 6), cfg.var_pool)
        c2 = random_code(gen_rng, gen_rng.randint(0, 6), cfg.var_pool)
        sigma = tuple(gen_rng.randint(-9, 9) for _ in range(gen_rng.randint(0, 4)))
        cb = compile_bool(b, delta)
        end = len(c1) + len(cb)
        want = MachineState(end if eval_bool(s, b) else end + delta, sigma, s)
        got = _run_exact(c1 + cb + c2, MachineState(len(c1), sigma, s), len(cb))
        if got != want:
            failures.append({"case": i, "program": repr(b), "detail": {"want": repr(want), "got": repr(got)}})
    return _report("bool-lemma", cfg, samples, failures)


def check_cmd_simulation(cfg: GenConfig, cases: int = 200, fuel: int = DEFAULT_FUEL,
                         vm_fuel: int = DEFAULT_VM_FUEL) -> dict:
    """Bracketed forward simulation for terminating commands."""
    failures = []
    counts = {"checked": 0, "skipped-nonterminating": 0}
    for i in range(cases):
        c, s = gen_case(cfg, i)
        r = interp(fuel, c, s)
        if not isinstance(r, Value):
            counts["skipped-nonterminating"] += 1
            continue
        counts["checked"] += 1
        rng = random.Random(f"sim/{cfg.seed}/{i}")
        c1 = random_code(rng, rng.randint(0, 5), cfg.var_pool)
        c2 = random_code(rng, rng.randint(0, 5), cfg.var_pool)
        sigma = tuple(rng.randint(-9, 9) for _ in range(rng.randint(0, 3)))
        cc = _compile_cmd(c)
        code = c1 + cc + c2
        end = len(c1) + len(cc)
        m = MachineState(len(c1), sigma, s)
        for _ in range(vm_fuel):
            if m is None or m.pc == end:
                break
            m = vm_step(code, m)
        want = MachineState(end, sigma, r.state)
        if m != want:
            failures.append({"case": i, "program": pretty_print(c), "detail": {"want": repr(want), "got": repr(m)}})
    return _report("cmd-simulation", cfg, cases, failures, counts=counts)


def _compile_cmd(c):
    from .compiler import compile_cmd

    return compile_cmd(c)


def _perturb(s: State, keep: Iterable[str], cfg: GenConfig, rng: random.Random) -> State:
    keep = set(keep)
    s1 = s
    for x in cfg.var_pool:
        if x not in keep:
            s1 = s1.update(x, rng.randint(*cfg.const_range))
    return s1


def check_dce(cfg: GenConfig, cases: int = 100, fuel: int = DEFAULT_FUEL,
              live_out_samples: int = 3,
              live_outs: Optional[Sequence[Sequence[str]]] = None) -> dict:
    """Original vs. dead-code-eliminated program on agreeing states.

    For each case and live-out set ``A``, ``s1`` agrees with ``s`` on
    ``live(c, A)`` and is random elsewhere. Both runs must terminate with
    final states agreeing on ``A``, or both must exhaust ``fuel``.
    """
    counts = {"instances": 0, "agree-terminated": 0, "agree-fuel-exhausted": 0, "violations": 0}
    failures = []
    for i in range(cases):
        c, s = gen_case(cfg, i)
        rng = random.Random(f"dce/{cfg.seed}/{i}")
        sets = live_outs if live_outs is not None else [
            sorted(x for x in cfg.var_pool if rng.random() < 0.5) for _ in range(live_out_samples)
        ]
        for a in sets:
            counts["instances"] += 1
            a = frozenset(a)
            s1 = _perturb(s, live(c, a), cfg, rng)
            opt = dce(c, a)
            r = interp(fuel, c, s)
            r1 = interp(fuel, opt, s1)
            if isinstance(r, Value) and isinstance(r1, Value) and agree(r.state, r1.state, a):
                counts["agree-terminated"] += 1
                continue
            if r is BOTTOM and r1 is BOTTOM:
                counts["agree-fuel-exhausted"] += 1
                continue
            counts["violations"] += 1
            failures.append({
                "case": i,
                "program": pretty_print(c),
                "detail": {
                    "live_out": sorted(a),
                    "optimized": pretty_print(opt),
                    "s": _state_json(s),
                    "s1": _state_json(s1),
                    "original": _describe(r),
                    "after_dce": _describe(r1),
                },
            })
    return _report("dce", cfg, cases, failures, fuel=fuel, counts=counts)


# ------------------------------------------------------------------ Hoare


def _in_box(s: State, box: int) -> bool:
    return all(-box <= s.lookup(x) <= box for x in s.names())


def sample_pre_states(pre, variables: Sequence[str], ghosts: Sequence[str], box: int,
                      samples: int, rng: random.Random, enumerate_limit: int = 200_000):
    """Up to ``samples`` valuations in the box satisfying ``pre``.

    Small boxes are enumerated exhaustively and then sampled (with
    replacement if fewer than ``samples`` valuations qualify); large boxes
    fall back to rejection sampling.
    """
    check = compile_assertion(pre, variables, ghosts)
    k = len(variables) + len(ghosts)
    values = range(-box, box + 1)
    if (2 * box + 1) ** k <= enumerate_limit:
        pool = [p for p in itertools.product(values, repeat=k) if check(*p)]
        if not pool:
            return []
        picked = rng.sample(pool, samples) if len(pool) >= samples else rng.choices(pool, k=samples)
    else:
        picked = []
        for _ in range(samples * 1000):
            p = tuple(rng.randint(-box, box) for _ in range(k))
            if check(*p):
                picked.append(p)
                if len(picked) == samples:
                    break
    n = len(variables)
    return [(State(dict(zip(variables, p[:n]))), dict(zip(ghosts, p[n:]))) for p in picked]


def _all_loops_measured(c) -> bool:
    match c:
        case Seq(c1, c2) | If(_, c1, c2):
            return _all_loops_measured(c1) and _all_loops_measured(c2)
        case While(_, body, _, m):
            return m is not None and _all_loops_measured(body)
    return True


def _has_loop(c) -> bool:
    match c:
        case Seq(c1, c2) | If(_, c1, c2):
            return _has_loop(c1) or _has_loop(c2)
        case While():
            return True
    return False


def check_hoare(entries: Optional[Sequence] = None, box: int = 8, samples: int = 200,
                fuel: int = DEFAULT_FUEL, seed: int = 0) -> dict:
    """VC discharge in a box, then concrete runs from sampled precondition states.

    ``entries`` is a sequence of ``(name, Triple)``; by default the bundled
    corpus. Programs whose VCs have a counterexample in the box are reported
    and excluded from the run phase. When every loop carries a measure the
    runs must also terminate within ``fuel``.
    """
    from .hoare import eval_assertion

    if entries is None:
        entries = corpus_mod.load_corpus()
    programs = []
    failures = []
    for index, (name, triple) in enumerate(entries):
        c = triple.cmd
        total = _all_loops_measured(c) and _has_loop(c)
        vcs = vcgen(triple.pre, c, triple.post)
        if total:
            avoid = ghosts_assertion(triple.pre) | ghosts_assertion(triple.post)
            vcs = vcs + termination_vcs(c, avoid=sorted(avoid))
        entry = {"name": name, "vcs": len(vcs), "total_correctness": total}
        found = find_counterexample(vcs, box)
        if found is not None:
            entry["status"] = "counterexample"
            entry["counterexample"] = {"origin": found[0].origin, "valuation": found[1]}
            programs.append(entry)
            continue
        entry["status"] = "valid-in-box"
        plain = erase(c)
        variables = sorted(free_vars_cmd(c) | free_vars_assertion(triple.pre) | free_vars_assertion(triple.post))
        ghosts = sorted(ghosts_assertion(triple.pre) | ghosts_assertion(triple.post))
        rng = random.Random(f"hoare/{seed}/{name}")
        starts = sample_pre_states(triple.pre, variables, ghosts, box, samples, rng)
        runs = terminated = 0
        warnings = []
        for s, g in starts:
            runs += 1
            r = interp(fuel, plain, s)
            if isinstance(r, Value):
                terminated += 1
                if eval_assertion(triple.post, r.state, g):
                    continue
                problem = "postcondition violated"
            elif r is BOTTOM and total:
                problem = "did not terminate within fuel"
            else:
                continue
            visited = run_small_step(plain, s, 10 * fuel, trace=True).trace
            escaped = not all(_in_box(st, box) for _, st in visited)
            record = {"case": index, "program": name,
                      "detail": {"problem": problem, "state": _state_json(s), "ghosts": g,
                                 "final": _describe(r)}}
            if escaped:
                warnings.append(record["detail"] | {"kind": "box-escape"})
            else:
                failures.append(record)
        entry.update(runs=runs, terminated=terminated, warnings=warnings)
        programs.append(entry)
    report = {
        "campaign": "hoare",
        "cfg": {"box": box, "samples": samples, "fuel": fuel, "seed": seed},
        "cases": len(programs),
        "passed": len(programs) - len({f["case"] for f in failures}),
        "failed": len({f["case"] for f in failures}),
        "programs": programs,
        "failures": failures,
    }
    return report
