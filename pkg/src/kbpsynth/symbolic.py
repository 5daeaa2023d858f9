"""Boolean encoding of a compiled model and the symbolic transition image."""

from __future__ import annotations

import operator
from typing import Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from .bdd import FALSE, TRUE, BddManager, BddRef, VarId
from .lang.ast import (
    ActRef, And, Atomic, Cmp, Const, Expr, Knows, Next, Not, Or, Ref, SkelVar, Statement,
)
from .lang.model import CompiledModel, Value

SkelResolver = Callable[[SkelVar], BddRef]

_CMP = {
    "==": operator.eq, "!=": operator.ne, "<": operator.lt, "<=": operator.le,
    ">": operator.gt, ">=": operator.ge,
}


class EvalError(Exception):
    pass


def _compare(op: str, a: Value, b: Value) -> bool:
    if isinstance(a, bool) != isinstance(b, bool) or isinstance(a, str) != isinstance(b, str):
        if op == "==":
            return False
        if op == "!=":
            return True
        raise EvalError(f"cannot order {a!r} and {b!r}")
    return _CMP[op](a, b)


class SymbolicModel:
    """Owns the variable layout of one compiled model inside a BDD manager.

    Layout: action variables, then environment variable bits (declaration
    order, each bit followed by its primed twin), then per-agent local bits,
    then history variables grouped by time, agent and base variable.
    ``reverse_agents`` flips the order of the per-agent blocks.
    """

    def __init__(self, cm: CompiledModel, manager: Optional[BddManager] = None, reverse_agents: bool = False):
        self.cm = cm
        self.mgr = manager or BddManager()
        mgr = self.mgr
        self.act_var: Dict[Tuple[str, str], VarId] = {}
        for ag, act in cm.actions:
            self.act_var[(ag, act)] = mgr.add_var(f"!{ag}.{act}")
        self.bits: Dict[str, List[VarId]] = {}
        self.pbits: Dict[str, List[VarId]] = {}

        agents = list(cm.agent_names)
        if reverse_agents:
            agents.reverse()
        env = [v for v in cm.vars if v.owner is None]
        plain = [v for ag in agents for v in cm.vars if v.owner == ag and v.history_time is None]
        hist = [v for v in cm.vars if v.owner is not None and v.history_time is not None]
        rank = {ag: i for i, ag in enumerate(agents)}
        hist.sort(key=lambda v: (v.history_time, rank[v.owner], v.local.rsplit("@", 1)[0]))
        for v in env + plain + hist:
            self._alloc(v.name, v.domain.bits)

        self.state_vars: List[VarId] = [b for v in cm.vars for b in self.bits[v.name]]
        self.primed_vars: List[VarId] = [b for v in cm.vars for b in self.pbits[v.name]]
        self.action_vars: List[VarId] = list(self.act_var.values())
        self.state_cube = mgr.cube(self.state_vars)
        self.action_cube = mgr.cube(self.action_vars)
        self.prime_map = {u: p for v in cm.vars for u, p in zip(self.bits[v.name], self.pbits[v.name])}
        self.unprime_map = {p: u for u, p in self.prime_map.items()}

        self.obs_bits: Dict[str, List[VarId]] = {
            a.name: [b for g in a.observables for b in self.bits[g]] for a in cm.agents
        }
        self._hidden_cube: Dict[str, BddRef] = {}
        for a in cm.agents:
            obs = set(self.obs_bits[a.name])
            self._hidden_cube[a.name] = mgr.cube([b for b in self.state_vars if b not in obs])

        valid = TRUE
        for v in cm.vars:
            if not v.domain.is_dense:
                valid = mgr.and_(valid, mgr.disj(self.value_cube(v.name, x) for x in v.domain.values))
        self.valid = valid

    def collect(self, roots: Sequence[BddRef]) -> List[BddRef]:
        """Garbage-collect the manager, keeping ``roots`` and this model's own diagrams."""
        agents = list(self._hidden_cube)
        own = [self.state_cube, self.action_cube, self.valid] + [self._hidden_cube[a] for a in agents]
        new = self.mgr.collect(list(roots) + own)
        k = len(roots)
        self.state_cube, self.action_cube, self.valid = new[k:k + 3]
        for a, h in zip(agents, new[k + 3:]):
            self._hidden_cube[a] = h
        return new[:k]

    def _alloc(self, name: str, nbits: int) -> None:
        ub, pb = [], []
        for i in range(nbits):
            base = name if nbits == 1 else f"{name}#{i}"
            ub.append(self.mgr.add_var(base))
            pb.append(self.mgr.add_var(base + "'"))
        self.bits[name] = ub
        self.pbits[name] = pb

    # -- encoding ---------------------------------------------------------

    def value_cube(self, name: str, value: Value, primed: bool = False) -> BddRef:
        dom = self.cm.domain(name)
        bits = (self.pbits if primed else self.bits)[name]
        enc = dom.encode(value)
        return self.mgr.cube_from({b: x for b, x in zip(bits, enc)})

    def hidden_cube(self, agent: str) -> BddRef:
        return self._hidden_cube[agent]

    def cases(self, e: Expr, ctx: "EvalContext") -> List[Tuple[Value, BddRef]]:
        if isinstance(e, Const):
            return [(e.value, TRUE)]
        if isinstance(e, Ref):
            dom = self.cm.domain(e.name)
            if dom.kind == "bool":
                x = self.mgr.var(self.bits[e.name][0])
                return [(False, self.mgr.not_(x)), (True, x)]
            return [(v, self.value_cube(e.name, v)) for v in dom.values]
        f = self.formula(e, ctx)
        return [(False, self.mgr.not_(f)), (True, f)]

    def formula(self, e: Expr, ctx: Optional["EvalContext"] = None) -> BddRef:
        ctx = ctx or EvalContext()
        mgr = self.mgr
        if isinstance(e, Const):
            if isinstance(e.value, bool):
                return TRUE if e.value else FALSE
            raise EvalError(f"constant {e.value!r} used as a formula")
        if isinstance(e, Ref):
            if self.cm.domain(e.name).kind != "bool":
                raise EvalError(f"{e.name} is not boolean")
            return mgr.var(self.bits[e.name][0])
        if isinstance(e, ActRef):
            v = self.act_var.get((e.agent, e.action))
            return FALSE if v is None else mgr.var(v)
        if isinstance(e, Not):
            return mgr.not_(self.formula(e.arg, ctx))
        if isinstance(e, And):
            return mgr.and_(self.formula(e.left, ctx), self.formula(e.right, ctx))
        if isinstance(e, Or):
            return mgr.or_(self.formula(e.left, ctx), self.formula(e.right, ctx))
        if isinstance(e, Cmp):
            out = FALSE
            rc = self.cases(e.right, ctx)
            for lv, lb in self.cases(e.left, ctx):
                for rv, rb in rc:
                    if _compare(e.op, lv, rv):
                        out = mgr.or_(out, mgr.and_(lb, rb))
            return out
        if isinstance(e, Knows):
            if ctx.slice is None:
                raise EvalError("knowledge operator evaluated without a state set")
            agent = e.agent.value if isinstance(e.agent, Const) else str(e.agent)
            return self.knows(ctx.slice, agent, self.formula(e.arg, ctx))
        if isinstance(e, SkelVar):
            if ctx.skel is None:
                raise EvalError(f"unbound skeleton variable for {e.agent} at time {e.time}")
            return ctx.skel(e)
        if isinstance(e, Next):
            raise EvalError("temporal operator in an atemporal context")
        raise EvalError(f"cannot evaluate {e!r}")

    def knows(self, S: BddRef, agent: str, phi: BddRef) -> BddRef:
        """States of ``S`` where every ``S``-state with the same observation satisfies ``phi``."""
        mgr = self.mgr
        bad = mgr.and_exists(S, mgr.not_(phi), self._hidden_cube[agent])
        return mgr.diff(S, bad)

    # -- sets of states ---------------------------------------------------

    def initial_set(self) -> BddRef:
        f = self.mgr.and_(self.valid, self.formula(self.cm.env_init))
        for a in self.cm.agents:
            f = self.mgr.and_(f, self.formula(a.init))
        return f

    def image(self, S: BddRef, t: int, skel: Optional[SkelResolver] = None,
              statements: Optional[Mapping[str, Statement]] = None) -> BddRef:
        """All successors of ``S`` under every enabled choice of the time-``t`` statements."""
        mgr = self.mgr
        ctx = EvalContext(slice=S, skel=skel)
        stmts = statements if statements is not None else self.cm.statements_at(t)
        X = S
        assigned_all: List[str] = []
        for a in self.cm.agents:
            rel, assigned = self._agent_relation(a.name, stmts[a.name], ctx)
            X = mgr.and_(X, rel)
            assigned_all.extend(assigned)
            mgr.trim_caches()
        # the environment program reads the pre-state and the joint action
        for st in self.cm.tau:
            X = self._run_env_statement(X, st)
            mgr.trim_caches()
        drop = list(self.action_vars) + [b for n in assigned_all for b in self.bits[n]]
        X = mgr.exists(X, drop)
        if assigned_all:
            X = mgr.rename(X, {p: u for n in assigned_all for u, p in zip(self.bits[n], self.pbits[n])})
        return X

    def _arms(self, st: Statement) -> List[Tuple[Expr, Atomic]]:
        if isinstance(st, Atomic):
            return [(Const(True), st)]
        arms = [(a.guard, a.body) for a in st.effective_arms()]
        if st.otherwise is None:
            fall: Expr = Const(True)
            for g, _ in arms:
                fall = And(fall, Not(g))
            arms.append((fall, Atomic(None, ())))
        return arms

    def _assign_rel(self, target: str, value: Expr, ctx: "EvalContext") -> BddRef:
        mgr = self.mgr
        out = FALSE
        for v, cond in self.cases(value, ctx):
            if self.cm.domain(target).contains(v):
                out = mgr.or_(out, mgr.and_(cond, self.value_cube(target, v, primed=True)))
        return out

    def _frame(self, name: str) -> BddRef:
        mgr = self.mgr
        f = TRUE
        for u, p in zip(self.bits[name], self.pbits[name]):
            f = mgr.and_(f, mgr.iff(mgr.var(u), mgr.var(p)))
        return f

    def _agent_relation(self, agent: str, st: Statement, ctx: "EvalContext") -> Tuple[BddRef, List[str]]:
        mgr = self.mgr
        arms = self._arms(st)
        assigned = sorted({x.target.name for _, at in arms for x in at.assigns})
        my_acts = [(act, v) for (ag, act), v in self.act_var.items() if ag == agent]
        rel = FALSE
        for guard, at in arms:
            g = self.formula(guard, ctx)
            if g == FALSE:
                continue
            r = g
            for act, v in my_acts:
                r = mgr.and_(r, mgr.var(v) if act == at.action else mgr.nvar(v))
            values = {x.target.name: x.value for x in at.assigns}
            for n in assigned:
                r = mgr.and_(r, self._assign_rel(n, values[n], ctx) if n in values else self._frame(n))
            rel = mgr.or_(rel, r)
        return rel, assigned

    def _run_env_atomic(self, X: BddRef, at: Atomic) -> BddRef:
        if not at.assigns:
            return X
        mgr = self.mgr
        ctx = EvalContext()
        rel = TRUE
        targets = []
        for x in at.assigns:
            rel = mgr.and_(rel, self._assign_rel(x.target.name, x.value, ctx))
            targets.append(x.target.name)
        cur = [b for n in targets for b in self.bits[n]]
        X = mgr.and_exists(X, rel, cur)
        return mgr.rename(X, {p: u for n in targets for u, p in zip(self.bits[n], self.pbits[n])})

    def _run_env_statement(self, X: BddRef, st: Statement) -> BddRef:
        mgr = self.mgr
        if isinstance(st, Atomic):
            return self._run_env_atomic(X, st)
        out = FALSE
        for guard, at in self._arms(st):
            g = self.formula(guard)
            if g == FALSE:
                continue
            out = mgr.or_(out, self._run_env_atomic(mgr.and_(X, g), at))
        return out

    # -- explicit views -----------------------------------------------------

    def decode(self, sat: Mapping[VarId, bool]) -> Tuple[Value, ...]:
        out = []
        for v in self.cm.vars:
            val = v.domain.decode([sat[b] for b in self.bits[v.name]])
            if val is None:
                raise EvalError(f"invalid encoding for {v.name}")
            out.append(val)
        return tuple(out)

    def encode(self, state: Sequence[Value]) -> BddRef:
        assignment: Dict[VarId, bool] = {}
        for v, val in zip(self.cm.vars, state):
            assignment.update(zip(self.bits[v.name], v.domain.encode(val)))
        return self.mgr.cube_from(assignment)

    def states(self, S: BddRef) -> Iterator[Tuple[Value, ...]]:
        for sat in self.mgr.enumerate_sats(S, self.state_vars):
            yield self.decode(sat)

    def count(self, S: BddRef) -> int:
        return self.mgr.count(S, self.state_vars)

    def observation_set(self, f: BddRef, agent: str) -> BddRef:
        """Projection of a state set onto ``agent``'s observable bits."""
        return self.mgr.exists(f, self._hidden_cube[agent])

    def decode_observation(self, agent: str, sat: Mapping[VarId, bool]) -> Tuple[Value, ...]:
        out = []
        for g in self.cm.agent_by_name[agent].observables:
            out.append(self.cm.domain(g).decode([sat[b] for b in self.bits[g]]))
        return tuple(out)

    def observations(self, f: BddRef, agent: str) -> Iterator[Tuple[Value, ...]]:
        proj = self.observation_set(f, agent)
        for sat in self.mgr.enumerate_sats(proj, self.obs_bits[agent]):
            yield self.decode_observation(agent, sat)


class EvalContext:
    def __init__(self, slice: Optional[BddRef] = None, skel: Optional[SkelResolver] = None):
        self.slice = slice
        self.skel = skel
