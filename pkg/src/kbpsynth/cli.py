"""Command-line front end.

Exit status: 0 on success, 1 for invalid input or a failed check, 2 when an
internal invariant is violated.
"""

from __future__ import annotations

import argparse
import logging
import random
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from .bdd import BddError
from .corpus import bundled, bundled_names, corpus, generate
from .epistemic import ShapeError, View
from .lang import ParseError, format_model, parse
from .lang.ast import SystemModel
from .lang.model import CompiledModel, ModelError, ValidationError, compile_model
from .oracle import (
    DEFAULT_BOUND, OracleBoundError, _prepare, check_implementation, enumerate_initial, explicit_synthesize,
    model_check_X, replay, symbolic_tables,
)
from .semantics import EvalError, read_trace, simulate
from .synthesis import emit, read_sidecar, synthesize, theta_from_sidecar

log = logging.getLogger("kbpsynth")

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2


class UserError(Exception):
    pass


class InvariantError(Exception):
    pass


USER_ERRORS = (UserError, ParseError, ModelError, ValidationError, ShapeError, EvalError,
               OracleBoundError, ValueError, KeyError, OSError)


# ---------------------------------------------------------------------------
# helpers


def load_text(path: str) -> str:
    p = Path(path)
    if p.exists():
        return p.read_text()
    if path in bundled_names():
        return bundled(path)
    raise UserError(f"{path}: no such file (bundled models: {', '.join(bundled_names())})")


def load_model(path: str) -> SystemModel:
    return parse(load_text(path))


def parse_view(text: str, allow_obs: bool = False) -> View:
    view = View.parse(text)
    if view is View.OBS and not allow_obs:
        raise UserError("synthesis under the obs view is not supported; use --view clk or --view spr")
    return view


def write_or_print(text: str, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def sidecar_path(out: str) -> Path:
    return Path(out).with_suffix(".conditions.tsv")


def err(msg: str) -> None:
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# synth


def compare_with_oracle(model: SystemModel, view: View, bound: int, result=None) -> List[str]:
    """Differences between the symbolic and explicit synthesis; empty when they agree."""
    result = result or synthesize(model, view)
    ex = explicit_synthesize(model, view, bound)
    problems = []
    sym_tables = symbolic_tables(result)
    for v, table in ex.tables.items():
        got = sym_tables.get(v)
        if got != table:
            problems.append(f"condition of {v.agent} at time {v.time} differs from the explicit oracle")
    for t, (S, E) in enumerate(zip(result.slices, ex.slices)):
        if set(result.sym.states(S)) != E:
            problems.append(f"slice {t} differs from the explicit oracle")
    return problems


def cmd_synth(args) -> int:
    view = parse_view(args.view)
    model = load_model(args.model)
    result = synthesize(model, view, reverse_agents=args.reverse_order)
    for w in result.warnings:
        err(f"warning: {w}")
    program, side = emit(result)
    if args.out:
        Path(args.out).write_text(program)
        sidecar_path(args.out).write_text(side)
        err(f"wrote {args.out} and {sidecar_path(args.out)}")
    else:
        sys.stdout.write(program)
    if args.sidecar:
        Path(args.sidecar).write_text(side)
    err(f"{len(result.slices)} slices ({view.value} view, {result.seconds:.2f}s)")
    for t, (size, nodes) in enumerate(zip(result.slice_sizes, result.slice_nodes)):
        err(f"  time {t}: {size} states, {nodes} nodes")
    if args.report:
        from .report import write_report

        tsv, png = write_report(result, Path(args.report), title=Path(args.model).stem)
        err(f"wrote {tsv} and {png}")
    if args.oracle:
        problems = compare_with_oracle(model, view, args.oracle_bound, result)
        if problems:
            raise InvariantError("; ".join(problems))
        err("explicit oracle agrees")
    return EXIT_OK


# ---------------------------------------------------------------------------
# check


def cmd_check(args) -> int:
    view = parse_view(args.view, allow_obs=args.formula is not None)
    model = load_model(args.model)
    if args.formula is not None:
        res = model_check_X(model, view, args.formula, depth=args.depth)
        print(f"{'pass' if res.holds else 'FAIL'}\tdepth {res.depth}\t{res.formula}")
        print("slice sizes: " + " ".join(str(n) for n in res.slice_sizes))
        if not res.holds:
            write_trace(res.trace.export(), args.out, "counterexample")
        return EXIT_OK if res.holds else EXIT_USER
    if args.sidecar:
        _, skel, _ = _prepare(model, view)
        theta = theta_from_sidecar(skel, read_sidecar(load_text(args.sidecar)))
    else:
        theta = synthesize(model, view).theta
    report = check_implementation(model, theta, view)
    sys.stdout.write(report.render())
    if not report.passed:
        parts = []
        for e in report.entries:
            if e.trace is not None:
                parts.append(f"# {e.agent} time {e.time}: {e.formula}\n" + e.trace.export())
        write_trace("".join(parts), args.out, "counterexamples")
        return EXIT_USER
    return EXIT_OK


def write_trace(text: str, out: Optional[str], what: str) -> None:
    if out:
        Path(out).write_text(text)
        err(f"{what} written to {out}")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# simulate


def parse_assignments(text: str) -> Dict[str, str]:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise UserError(f"bad assignment {part!r}; expected name=value")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def select_initial(cm: CompiledModel, assignment: Optional[str], index: Optional[int], bound: int):
    states = enumerate_initial(cm, bound)
    if not states:
        raise UserError("the initial condition is unsatisfiable")
    if index is not None:
        if not 0 <= index < len(states):
            raise UserError(f"initial state index {index} out of range (0..{len(states) - 1})")
        return states[index]
    if assignment:
        from .lang.model import format_value

        want = parse_assignments(assignment)
        for name in want:
            if name not in cm.index:
                raise UserError(f"unknown variable {name!r}")
        for s in states:
            if all(format_value(s[cm.index[n]]) == v for n, v in want.items()):
                return s
        raise UserError(f"no initial state satisfies {assignment}")
    return states[0]


def parse_crashes(text: str) -> Dict[Tuple[str, int], bool]:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        agent, _, step = part.partition("@")
        if not step.isdigit():
            raise UserError(f"bad crash {part!r}; expected AGENT@STEP")
        out[(agent, int(step))] = True
    return out


def make_resolver(cm: CompiledModel, seed: Optional[int], crashes: Dict[Tuple[str, int], bool]):
    """Arm chooser: crash statements follow the schedule, everything else is seeded or lowest."""
    from .lang.ast import statement_atomics

    crash_stmt: Dict[int, Tuple[str, int]] = {}  # tau index -> (agent, arm that crashes it)
    for k, st in enumerate(cm.tau):
        for arm, at in enumerate(statement_atomics(st)):
            for x in at.assigns:
                name = x.target.name
                if name.startswith("crashed[") and name.endswith("]"):
                    crash_stmt[k] = (name[len("crashed["):-1], arm)
    for agent, _ in crashes:
        if agent not in {a for a, _ in crash_stmt.values()}:
            raise UserError(f"the model has no crash statement for {agent!r}")
    rng = random.Random(seed) if seed is not None else None

    def resolve(component: str, step: int, enabled: List[int]) -> int:
        if component.startswith("env:"):
            k = int(component[4:])
            if k in crash_stmt and (crashes or rng is None):
                agent, arm = crash_stmt[k]
                if crashes.get((agent, step)) and arm in enabled:
                    return arm
                others = [j for j in enabled if j != arm]
                return others[0] if others else enabled[0]
        return rng.choice(enabled) if rng is not None else enabled[0]

    return resolve


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    if model.is_knowledge_based:
        raise UserError("simulate needs a standard program; run `kbpsynth synth` first")
    cm = compile_model(model)
    if args.replay:
        states = read_trace(cm, load_text(args.replay))
        trace = replay(cm, states) if len(states) > 1 else None
        err(f"replayed {len(states)} states")
        write_or_print(trace.export() if trace else "", args.out)
        return EXIT_OK
    s0 = select_initial(cm, args.init, args.init_index, args.oracle_bound)
    steps = cm.length if args.steps is None else args.steps
    resolver = make_resolver(cm, args.seed, parse_crashes(args.crash or ""))
    trace = simulate(cm, s0, steps, resolver)
    write_or_print(trace.export(), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    if args.n < 2:
        raise UserError("n must be at least 2")
    if args.steps is not None and args.steps < 1:
        raise UserError("steps must be at least 1")
    text = generate(args.family, args.n, args.steps or 0, clk=args.clk)
    compile_model(parse(text))
    write_or_print(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle-compare


def _compare_one(job: Tuple[str, str, str, int]) -> Tuple[str, str, str, str]:
    name, text, view, bound = job
    try:
        problems = compare_with_oracle(parse(text), View.parse(view), bound)
    except OracleBoundError as e:
        return name, view, "skip", str(e)
    return name, view, ("ok" if not problems else "DIFF"), "; ".join(problems)


def cmd_oracle_compare(args) -> int:
    if args.models:
        models = [(m, load_text(m)) for m in args.models]
    else:
        models = [(name, format_model(m)) for name, m in corpus().items()]
    views = [args.view] if args.view else ["clk", "spr"]
    for v in views:
        parse_view(v)
    jobs = [(name, text, v, args.oracle_bound) for name, text in models for v in views]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_compare_one, jobs))
    else:
        rows = [_compare_one(j) for j in jobs]
    for name, view, status, detail in rows:
        print("\t".join(x for x in (status, name, view, detail) if x))
    bad = [r for r in rows if r[2] == "DIFF"]
    if bad:
        raise InvariantError(f"{len(bad)} model(s) disagree with the explicit oracle")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kbpsynth", description="Synthesize implementations of knowledge-based programs.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, view_default="clk"):
        sp.add_argument("--view", default=view_default, help="clk or spr")
        sp.add_argument("--oracle-bound", type=int, default=DEFAULT_BOUND,
                        help="largest explicit state set the oracle may build")
        sp.add_argument("--out", help="output path (default: stdout)")

    sp = sub.add_parser("synth", help="synthesize a standard program")
    sp.add_argument("model")
    common(sp)
    sp.add_argument("--sidecar", help="also write the condition table here")
    sp.add_argument("--report", metavar="DIR", help="write slices.tsv and slices.png to DIR")
    sp.add_argument("--oracle", action="store_true", help="cross-check against explicit synthesis")
    sp.add_argument("--reverse-order", action="store_true", help="reverse the agent blocks of the variable order")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("check", help="check conditions or a formula X^k phi")
    sp.add_argument("model")
    common(sp)
    sp.add_argument("--sidecar", help="condition table to check (default: synthesize afresh)")
    sp.add_argument("--formula", help="formula X^k phi to model check")
    sp.add_argument("--depth", type=int, help="extra X operators in front of --formula")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("simulate", help="run a standard program")
    sp.add_argument("model")
    common(sp)
    sp.add_argument("--init", help="initial state selector, e.g. 'muddy[Child0]=true,muddy[Child1]=false'")
    sp.add_argument("--init-index", type=int, help="index into the enumerated initial states")
    sp.add_argument("--steps", type=int, help="number of steps (default: program length)")
    sp.add_argument("--seed", type=int, help="choose among enabled arms at random with this seed")
    sp.add_argument("--crash", help="crash schedule, e.g. 'A3@0,A2@1'")
    sp.add_argument("--replay", metavar="TRACE", help="validate and re-export a trace file")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("gen", help="generate a corpus model")
    sp.add_argument("family", choices=["muddy", "election"])
    sp.add_argument("n", type=int)
    sp.add_argument("--steps", type=int, help="program length (election; default n)")
    sp.add_argument("--clk", action="store_true", help="muddy children variant for the clock view")
    sp.add_argument("--out", help="output path (default: stdout)")
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("oracle-compare", help="compare symbolic and explicit synthesis")
    sp.add_argument("models", nargs="*", help="model files (default: the built-in corpus)")
    sp.add_argument("--view", help="clk or spr (default: both)")
    sp.add_argument("--oracle-bound", type=int, default=DEFAULT_BOUND)
    sp.add_argument("--jobs", type=int, default=1, help="instances to run in parallel")
    sp.set_defaults(func=cmd_oracle_compare)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (InvariantError, AssertionError, BddError) as e:
        err(f"internal error: {e}")
        if args.verbose:
            traceback.print_exc()
        return EXIT_INTERNAL
    except ValidationError as e:
        for x in e.errors:
            err(f"error: {x}")
        return EXIT_USER
    except USER_ERRORS as e:
        err(f"error: {e}")
        return EXIT_USER
    except Exception as e:  # anything unexpected is a bug on our side
        err(f"internal error: {type(e).__name__}: {e}")
        if args.verbose:
            traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
