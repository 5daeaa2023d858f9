"""Independent checks: explicit-state synthesis, implementation checking, X^k model checking."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from .bdd import FALSE, BddRef
from .epistemic import EpistemicStructure, View, sat_set
from .lang.ast import And, Expr, Next, SkelVar, SystemModel, walk
from .lang.model import CompiledModel, Value, compile_model, format_value
from .lang.parser import parse_formula
from .lang.printer import format_expr
from .lang.transforms import Skeleton, history_transform, skel_id, skeleton, substitute
from .semantics import (
    Evaluator, State, Trace, enabled_arms, environment_outcomes, joint_action_vars, statement_arms,
    _assign,
)
from .symbolic import SymbolicModel

DEFAULT_BOUND = 1 << 16


class OracleBoundError(Exception):
    pass


# ---------------------------------------------------------------------------
# explicit initial states by constraint propagation over the top-level conjuncts


def _conjuncts(e: Expr) -> List[Expr]:
    if isinstance(e, And):
        return _conjuncts(e.left) + _conjuncts(e.right)
    return [e]


def enumerate_initial(cm: CompiledModel, bound: int = DEFAULT_BOUND) -> List[State]:
    from .lang.ast import Ref

    parts = _conjuncts(cm.env_init)
    for a in cm.agents:
        parts += _conjuncts(a.init)
    order = [v.name for v in cm.vars]
    pos = {n: i for i, n in enumerate(order)}
    ready: Dict[int, List[Expr]] = {}
    for p in parts:
        refs = [pos[n.name] for n in walk(p) if isinstance(n, Ref)]
        ready.setdefault(max(refs, default=-1), []).append(p)
    ev = Evaluator(cm)
    out: List[State] = []
    if any(not ev.holds(p, ()) for p in ready.get(-1, [])):
        return out
    domains = [v.domain.values for v in cm.vars]
    cur: List[Value] = list(v.domain.default for v in cm.vars)

    def rec(i: int) -> None:
        if i == len(order):
            out.append(tuple(cur))
            if len(out) > bound:
                raise OracleBoundError(f"more than {bound} initial states")
            return
        for val in domains[i]:
            cur[i] = val
            s = tuple(cur)
            if all(ev.holds(p, s) for p in ready.get(i, [])):
                rec(i + 1)
        cur[i] = cm.vars[i].domain.default

    rec(0)
    return out


# ---------------------------------------------------------------------------
# explicit synthesis


@dataclass
class ExplicitSynthesis:
    cm: CompiledModel
    skeleton: Skeleton
    slices: List[Set[State]]
    tables: Dict[SkelVar, Dict[Tuple[Value, ...], bool]]

    def observation(self, agent: str, s: State) -> Tuple[Value, ...]:
        return tuple(s[self.cm.index[g]] for g in self.cm.agent_by_name[agent].observables)


def _prepare(model: SystemModel, view: View) -> Tuple[SystemModel, Skeleton, CompiledModel]:
    compile_model(model)
    work = history_transform(model) if view is View.SPR else model
    skel = skeleton(work)
    return work, skel, compile_model(work, programs=skel.programs)


def explicit_synthesize(model: SystemModel, view="clk", bound: int = DEFAULT_BOUND) -> ExplicitSynthesis:
    """Same iteration as the symbolic synthesizer, over explicit state sets."""
    view = View.parse(view) if isinstance(view, str) else view
    _, skel, cm = _prepare(model, view)
    S = set(enumerate_initial(cm, bound))
    last = max((v.time for v in skel.vars), default=-1)
    tables: Dict[SkelVar, Dict[Tuple[Value, ...], bool]] = {}
    slices = [S]
    obs_idx = {a.name: [cm.index[g] for g in a.observables] for a in cm.agents}

    def skel_value(v: SkelVar, s: State) -> bool:
        return tables[v][tuple(s[i] for i in obs_idx[v.agent])]

    for k in range(last + 1):
        ev = Evaluator(cm, slice=S)
        for v in [v for v in skel.vars if v.time == k]:
            table: Dict[Tuple[Value, ...], bool] = {}
            for s in S:
                o = tuple(s[i] for i in obs_idx[v.agent])
                val = ev.holds(cm.skel_formulas[v], s)
                if table.setdefault(o, val) != val:
                    raise AssertionError(f"{skel_id(v)} is not determined by the observation {o}")
            tables[v] = table
        if k < last:
            ev = Evaluator(cm, slice=S, skel=skel_value)
            nxt: Set[State] = set()
            stmts = cm.statements_at(k)
            for s in S:
                nxt |= explicit_successors(cm, s, stmts, ev)
                if len(nxt) > bound:
                    raise OracleBoundError(f"slice {k + 1} exceeds {bound} states")
            S = nxt
            slices.append(S)
    return ExplicitSynthesis(cm, skel, slices, tables)


def explicit_successors(cm: CompiledModel, s: State, stmts, ev: Evaluator) -> Set[State]:
    return {t for t, _, _ in step_options(cm, s, stmts, ev)}


def step_options(cm: CompiledModel, s: State, stmts, ev: Evaluator):
    """Yield (successor, agent arm choice, joint action) for every enabled combination."""
    per_agent = []
    for a in cm.agents:
        arms = statement_arms(stmts[a.name])
        per_agent.append([(k, arms[k][1]) for k in enabled_arms(ev, s, stmts[a.name])])
    for combo in itertools.product(*per_agent):
        chosen = {ag: at for ag, (_, at) in zip(cm.agent_names, combo)}
        local_vals = {x.target.name: ev.value(x.value, s) for _, at in combo for x in at.assigns}
        act = joint_action_vars(cm, chosen)
        for s2, _ in environment_outcomes(cm, s, act):
            new = list(s2)
            _assign(cm, new, local_vals)
            yield (tuple(new), {ag: k for ag, (k, _) in zip(cm.agent_names, combo)},
                   {ag: at.action for ag, at in chosen.items()})


def symbolic_tables(result) -> Dict[SkelVar, Dict[Tuple[Value, ...], bool]]:
    """Truth tables of the symbolic conditions on their realized observations."""
    sym = result.sym
    out = {}
    for v, c in result.conditions.items():
        table = {}
        for sat in sym.mgr.enumerate_sats(c.care, sym.obs_bits[v.agent]):
            table[sym.decode_observation(v.agent, sat)] = sym.mgr.evaluate(c.bdd, sat)
        out[v] = table
    return out


# ---------------------------------------------------------------------------
# witnesses


def _witness_path(sym: SymbolicModel, slices: Sequence[BddRef], target: State, images) -> List[State]:
    """States s_0..s_t with s_t = target, each in its slice and each a successor of the previous.

    ``images[j]`` maps a set at time j to its successors.  Predecessors are
    found by fixing one state bit at a time while some successor stays in
    the target set.
    """
    mgr = sym.mgr
    path = [target]
    T = sym.encode(target)
    for j in range(len(slices) - 2, -1, -1):
        X = slices[j]
        for b in sym.state_vars:
            X1 = mgr.and_(X, mgr.var(b))
            if X1 != FALSE and mgr.and_(images[j](X1), T) != FALSE:
                X = X1
            else:
                X = mgr.and_(X, mgr.nvar(b))
        s = next(sym.states(X))
        path.append(s)
        T = sym.encode(s)
    path.reverse()
    return path


def replay(cm: CompiledModel, path: Sequence[State]) -> Trace:
    """An explicit trace through ``path`` with the agent choices and actions that realize it."""
    trace = Trace(cm, [path[0]])
    ev = Evaluator(cm)
    for t in range(len(path) - 1):
        for s2, choice, acts in step_options(cm, path[t], cm.statements_at(t), ev):
            if s2 == path[t + 1]:
                trace.states.append(s2)
                trace.choices.append(choice)
                trace.actions.append(acts)
                break
        else:
            raise AssertionError(f"no explicit step from time {t} reaches the next witness state")
    return trace


# ---------------------------------------------------------------------------
# implementation check


@dataclass
class CheckEntry:
    agent: str
    time: int
    formula: str
    passed: bool
    witness: Optional[State] = None
    observation: Optional[Tuple[Value, ...]] = None
    trace: Optional[Trace] = None


@dataclass
class CheckReport:
    entries: List[CheckEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def render(self) -> str:
        lines = []
        for e in self.entries:
            verdict = "pass" if e.passed else "FAIL"
            line = f"{verdict}\t{e.agent}\t{e.time}\t{e.formula}"
            if not e.passed and e.observation is not None:
                line += "\tobservation=" + ",".join(format_value(v) for v in e.observation)
            lines.append(line)
        lines.append(f"{'PASS' if self.passed else 'FAIL'}: {sum(e.passed for e in self.entries)}"
                     f"/{len(self.entries)} conditions")
        return "\n".join(lines) + "\n"


def check_implementation(model: SystemModel, theta: Mapping[SkelVar, Expr], view="clk",
                         with_traces: bool = True) -> CheckReport:
    """Re-run the substituted program and compare every condition with its knowledge formula."""
    view = View.parse(view) if isinstance(view, str) else view
    work, skel, cm_sk = _prepare(model, view)
    missing = [v for v in skel.vars if v not in theta]
    if missing:
        raise KeyError(f"no condition for {skel_id(missing[0])} ({missing[0].agent}, time {missing[0].time})")
    std = substitute(work, skel, theta)
    cm = compile_model(std)
    sym = SymbolicModel(cm)
    mgr = sym.mgr
    report = CheckReport()
    last = max((v.time for v in skel.vars), default=-1)
    S = sym.initial_set()
    slices = [S]
    images = []
    for t in range(last + 1):
        m = EpistemicStructure(sym, S, t)
        for v in [v for v in skel.vars if v.time == t]:
            phi = cm_sk.skel_formulas[v]
            impl = cm.resolve(theta[v], agent=v.agent)
            a, b = sat_set(m, phi), sat_set(m, impl)
            entry = CheckEntry(v.agent, t, format_expr(v.formula), a == b)
            if a != b:
                bad = mgr.xor(a, b)
                s = next(sym.states(bad))
                entry.witness = s
                entry.observation = tuple(s[cm.index[g]] for g in cm.agent_by_name[v.agent].observables)
                if with_traces:
                    entry.trace = replay(cm, _witness_path(sym, slices, s, images))
            report.entries.append(entry)
        if t < last:
            images.append(lambda X, t=t: sym.image(X, t))
            S = sym.image(S, t)
            slices.append(S)
    return report


# ---------------------------------------------------------------------------
# bounded model checking of X^k phi


@dataclass
class ModelCheckResult:
    holds: bool
    depth: int
    formula: str
    witness: Optional[State] = None
    trace: Optional[Trace] = None
    slice_sizes: List[int] = field(default_factory=list)


def split_next(phi: Expr) -> Tuple[int, Expr]:
    k = 0
    while isinstance(phi, Next):
        k, phi = k + 1, phi.arg
    if any(isinstance(n, Next) for n in walk(phi)):
        raise ValueError("only formulas of the form X^k phi with atemporal phi are supported")
    return k, phi


def standard_for(model: SystemModel, view: View) -> SystemModel:
    """The standard model to check: synthesized if ``model`` is knowledge-based."""
    if model.is_knowledge_based:
        from .synthesis import synthesize

        return synthesize(model, view).standard_model
    if view is View.SPR:
        return history_transform(model)
    return model


def model_check_X(model: SystemModel, view, phi, depth: Optional[int] = None) -> ModelCheckResult:
    """Does X^depth phi hold at time 0 of every run?"""
    view = View.parse(view) if isinstance(view, str) else view
    if isinstance(phi, str):
        phi = parse_formula(phi)
    k, body = split_next(phi)
    if depth is not None:
        k += depth
    std = standard_for(model, view)
    cm = compile_model(std)
    if k > cm.length:
        raise ValueError(f"depth {k} exceeds the program length {cm.length}")
    if view is View.OBS and any(True for n in walk(body) if type(n).__name__ == "Knows"):
        raise ValueError("knowledge formulas need the clk or spr view")
    sym = SymbolicModel(cm)
    resolved = cm.resolve(body)
    S = sym.initial_set()
    slices = [S]
    for t in range(k):
        S = sym.image(S, t)
        slices.append(S)
    good = sat_set(EpistemicStructure(sym, S, k), resolved)
    bad = sym.mgr.diff(S, good)
    res = ModelCheckResult(bad == FALSE, k, format_expr(phi), slice_sizes=[sym.count(x) for x in slices])
    if bad != FALSE:
        s = next(sym.states(bad))
        images = [lambda X, t=t: sym.image(X, t) for t in range(k)]
        res.witness = s
        res.trace = replay(cm, _witness_path(sym, slices, s, images))
    return res


# ---------------------------------------------------------------------------
# explicit runs


def explicit_runs(cm: CompiledModel, steps: int, bound: int = DEFAULT_BOUND) -> List[Tuple[State, ...]]:
    """Every distinct state sequence of length ``steps + 1`` of a standard model."""
    ev = Evaluator(cm)
    runs: List[Tuple[State, ...]] = []

    def rec(path: Tuple[State, ...]) -> None:
        t = len(path) - 1
        if t == steps:
            runs.append(path)
            if len(runs) > bound:
                raise OracleBoundError(f"more than {bound} runs")
            return
        for s2 in sorted(explicit_successors(cm, path[-1], cm.statements_at(t), ev), key=repr):
            rec(path + (s2,))

    for s0 in enumerate_initial(cm, bound):
        rec((s0,))
    return runs
