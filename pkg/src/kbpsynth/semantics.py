"""Explicit-state operational semantics over typed values.

A global state is a tuple of values indexed like ``CompiledModel.vars``.  This
module never touches the boolean encoding, which is what makes it usable as
an independent check of :mod:`kbpsynth.symbolic`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Set, Tuple

from .lang.ast import (
    ActRef, And, Atomic, Cmp, Const, Expr, Knows, Next, Not, Or, Ref, SkelVar, SKIP, Statement,
)
from .lang.model import CompiledModel, Value, format_value
from .symbolic import EvalError, _compare

State = Tuple[Value, ...]
JointAction = Dict[str, Optional[str]]
# (component, step, enabled arm indices) -> chosen index
Resolver = Callable[[str, int, List[int]], int]


def lowest(component: str, step: int, enabled: List[int]) -> int:
    return enabled[0]


class Evaluator:
    """Evaluates resolved expressions in explicit states.

    ``slice`` is the set of states knowledge is relative to; ``skel`` maps a
    skeleton variable and a state to its truth value.
    """

    def __init__(self, cm: CompiledModel, slice: Optional[Iterable[State]] = None,
                 skel: Optional[Callable[[SkelVar, State], bool]] = None):
        self.cm = cm
        self.idx = cm.index
        self.slice = list(slice) if slice is not None else None
        self.skel = skel
        self._obs_idx = {a.name: tuple(cm.index[g] for g in a.observables) for a in cm.agents}
        self._classes: Dict[str, Dict[Tuple, List[State]]] = {}
        self._kcache: Dict[Tuple[str, Expr], Set[State]] = {}

    def observation(self, agent: str, s: State) -> Tuple[Value, ...]:
        return tuple(s[i] for i in self._obs_idx[agent])

    def classes(self, agent: str) -> Dict[Tuple, List[State]]:
        if agent not in self._classes:
            out: Dict[Tuple, List[State]] = {}
            for s in self.slice or ():
                out.setdefault(self.observation(agent, s), []).append(s)
            self._classes[agent] = out
        return self._classes[agent]

    def value(self, e: Expr, s: State, act: Optional[Mapping[Tuple[str, str], bool]] = None) -> Value:
        if isinstance(e, Const):
            return e.value
        if isinstance(e, Ref):
            return s[self.idx[e.name]]
        return self.holds(e, s, act)

    def holds(self, e: Expr, s: State, act: Optional[Mapping[Tuple[str, str], bool]] = None) -> bool:
        if isinstance(e, Const):
            if isinstance(e.value, bool):
                return e.value
            raise EvalError(f"constant {e.value!r} used as a formula")
        if isinstance(e, Ref):
            v = s[self.idx[e.name]]
            if not isinstance(v, bool):
                raise EvalError(f"{e.name} is not boolean")
            return v
        if isinstance(e, ActRef):
            return bool(act and act.get((e.agent, e.action), False))
        if isinstance(e, Not):
            return not self.holds(e.arg, s, act)
        if isinstance(e, And):
            return self.holds(e.left, s, act) and self.holds(e.right, s, act)
        if isinstance(e, Or):
            return self.holds(e.left, s, act) or self.holds(e.right, s, act)
        if isinstance(e, Cmp):
            return _compare(e.op, self.value(e.left, s, act), self.value(e.right, s, act))
        if isinstance(e, Knows):
            if self.slice is None:
                raise EvalError("knowledge operator evaluated without a state set")
            agent = e.agent.value
            key = (agent, e.arg)
            if key not in self._kcache:
                sat: Set[State] = set()
                for members in self.classes(agent).values():
                    if all(self.holds(e.arg, x) for x in members):
                        sat.update(members)
                self._kcache[key] = sat
            return s in self._kcache[key]
        if isinstance(e, SkelVar):
            if self.skel is None:
                raise EvalError(f"unbound skeleton variable for {e.agent} at time {e.time}")
            return self.skel(e, s)
        if isinstance(e, Next):
            raise EvalError("temporal operator in an atemporal context")
        raise EvalError(f"cannot evaluate {e!r}")


def statement_arms(st: Statement) -> List[Tuple[Expr, Atomic]]:
    """Arms with ``otherwise`` desugared; the implicit skip fallthrough comes last."""
    if isinstance(st, Atomic):
        return [(Const(True), st)]
    arms: List[Tuple[Expr, Atomic]] = [(a.guard, a.body) for a in st.effective_arms()]
    if st.otherwise is None:
        fall: Expr = Const(True)
        for g, _ in arms:
            fall = And(fall, Not(g))
        arms.append((fall, SKIP))
    return arms


def enabled_arms(ev: Evaluator, s: State, st: Statement) -> List[int]:
    """Indices (into :func:`statement_arms`) of the arms enabled in ``s``."""
    return [k for k, (g, _) in enumerate(statement_arms(st)) if ev.holds(g, s)]


def agent_step(cm: CompiledModel, s: State, st: Statement, ev: Optional[Evaluator] = None) -> List[Atomic]:
    ev = ev or Evaluator(cm)
    arms = statement_arms(st)
    return [arms[k][1] for k in enabled_arms(ev, s, st)]


def _assign(cm: CompiledModel, s: List[Value], values: Mapping[str, Value]) -> None:
    for name, v in values.items():
        if not cm.domain(name).contains(v):
            raise EvalError(f"value {format_value(v)} out of range for {name}")
        s[cm.index[name]] = v


def environment_outcomes(cm: CompiledModel, s: State, act: Mapping[Tuple[str, str], bool],
                         resolver: Optional[Resolver] = None, step: int = 0) -> List[Tuple[State, Tuple[int, ...]]]:
    """Final states of the environment program with the chosen arm per statement.

    With a resolver there is exactly one outcome; without one, every
    nondeterministic branch is followed.
    """
    ev = Evaluator(cm)
    frontier: List[Tuple[State, Tuple[int, ...]]] = [(s, ())]
    for k, st in enumerate(cm.tau):
        nxt: List[Tuple[State, Tuple[int, ...]]] = []
        arms = statement_arms(st)
        for cur, path in frontier:
            enabled = [j for j, (g, _) in enumerate(arms) if ev.holds(g, cur, act)]
            if resolver is not None and len(enabled) > 1:
                enabled = [resolver(f"env:{k}", step, enabled)]
            for j in enabled:
                at = arms[j][1]
                vals = {x.target.name: ev.value(x.value, cur, act) for x in at.assigns}
                new = list(cur)
                _assign(cm, new, vals)
                nxt.append((tuple(new), path + (j,)))
        frontier = nxt
    return frontier


def run_environment(cm: CompiledModel, s: State, act: Mapping[Tuple[str, str], bool],
                    resolver: Resolver = lowest, step: int = 0) -> State:
    return environment_outcomes(cm, s, act, resolver, step)[0][0]


def joint_action_vars(cm: CompiledModel, chosen: Mapping[str, Atomic]) -> Dict[Tuple[str, str], bool]:
    out = {key: False for key in cm.actions}
    for ag, at in chosen.items():
        if at.action is not None:
            out[(ag, at.action)] = True
    return out


def global_step(cm: CompiledModel, s: State, statements: Mapping[str, Statement], choice: Mapping[str, int],
                ev: Optional[Evaluator] = None, env_resolver: Resolver = lowest, step: int = 0) -> State:
    """One synchronous step: agents pick arms, the environment runs, locals update."""
    ev = ev or Evaluator(cm)
    chosen: Dict[str, Atomic] = {}
    local_vals: Dict[str, Value] = {}
    for a in cm.agents:
        st = statements[a.name]
        arms = statement_arms(st)
        k = choice[a.name]
        if k not in enabled_arms(ev, s, st):
            raise EvalError(f"arm {k} of {a.name}'s statement is not enabled")
        at = arms[k][1]
        chosen[a.name] = at
        for x in at.assigns:
            local_vals[x.target.name] = ev.value(x.value, s)
    act = joint_action_vars(cm, chosen)
    s2 = list(run_environment(cm, s, act, env_resolver, step))
    _assign(cm, s2, local_vals)
    return tuple(s2)


def successors(cm: CompiledModel, s: State, statements: Mapping[str, Statement],
               ev: Optional[Evaluator] = None) -> Set[State]:
    """Every successor of ``s`` over all enabled agent arms and environment branches."""
    ev = ev or Evaluator(cm)
    per_agent = []
    for a in cm.agents:
        st = statements[a.name]
        arms = statement_arms(st)
        per_agent.append([arms[k][1] for k in enabled_arms(ev, s, st)])
    out: Set[State] = set()
    for combo in itertools.product(*per_agent):
        chosen = dict(zip(cm.agent_names, combo))
        local_vals = {x.target.name: ev.value(x.value, s) for at in combo for x in at.assigns}
        act = joint_action_vars(cm, chosen)
        for s2, _ in environment_outcomes(cm, s, act):
            new = list(s2)
            _assign(cm, new, local_vals)
            out.add(tuple(new))
    return out


def initial_states(cm: CompiledModel) -> List[State]:
    """Brute-force enumeration of the initial states (small models only)."""
    ev = Evaluator(cm)
    out = []
    for vals in itertools.product(*(v.domain.values for v in cm.vars)):
        if ev.holds(cm.env_init, vals) and all(ev.holds(a.init, vals) for a in cm.agents):
            out.append(tuple(vals))
    return out


@dataclass
class Trace:
    cm: CompiledModel
    states: List[State]
    choices: List[Dict[str, int]] = field(default_factory=list)
    actions: List[Dict[str, Optional[str]]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.states)

    def value(self, t: int, name: str) -> Value:
        return self.states[t][self.cm.index[name]]

    def export(self) -> str:
        lines = []
        names = [v.name for v in self.cm.vars]
        for t, s in enumerate(self.states):
            parts = [f"{n}={format_value(v)}" for n, v in zip(names, s)]
            line = f"t={t} " + " ".join(parts)
            if t < len(self.actions):
                acts = " ".join(f"{ag}={a or 'nil'}" for ag, a in self.actions[t].items())
                line += f" | {acts}"
            lines.append(line)
        return "\n".join(lines) + "\n"


def simulate(cm: CompiledModel, s0: State, steps: int, resolver: Resolver = lowest) -> Trace:
    """Run a standard model from ``s0``; ``resolver`` picks among enabled arms."""
    if steps > cm.length:
        raise EvalError(f"{steps} steps requested but the program has length {cm.length}")
    trace = Trace(cm, [tuple(s0)])
    s = tuple(s0)
    ev = Evaluator(cm)
    for t in range(steps):
        stmts = cm.statements_at(t)
        choice: Dict[str, int] = {}
        acts: Dict[str, Optional[str]] = {}
        for a in cm.agents:
            en = enabled_arms(ev, s, stmts[a.name])
            k = en[0] if len(en) == 1 else resolver(a.name, t, en)
            choice[a.name] = k
            acts[a.name] = statement_arms(stmts[a.name])[k][1].action
        s = global_step(cm, s, stmts, choice, ev, resolver, t)
        trace.states.append(s)
        trace.choices.append(choice)
        trace.actions.append(acts)
    return trace


def state_from_assignment(cm: CompiledModel, values: Mapping[str, Value], base: Optional[State] = None) -> State:
    s = list(base) if base is not None else [v.domain.default for v in cm.vars]
    _assign(cm, s, values)
    return tuple(s)


def read_trace(cm: CompiledModel, text: str) -> List[State]:
    """States of a trace in the ``Trace.export`` format; actions are ignored."""
    decode = {v.name: {format_value(x): x for x in v.domain.values} for v in cm.vars}
    states = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("|", 1)[0].strip()
        if not line or line.startswith("#"):
            continue
        fields = dict(p.split("=", 1) for p in line.split())
        if fields.pop("t", None) != str(len(states)):
            raise EvalError(f"line {n}: expected t={len(states)}")
        try:
            states.append(tuple(decode[v.name][fields[v.name]] for v in cm.vars))
        except KeyError as e:
            raise EvalError(f"line {n}: missing or invalid value for {e.args[0]}") from None
    return states
