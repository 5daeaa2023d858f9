"""Time slices as epistemic structures, and the per-agent local-state views."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Tuple

from .bdd import BddRef
from .lang.ast import And, Const, Expr, Knows, Not, Or, Cmp, Ref, SkelVar, walk
from .semantics import Trace
from .symbolic import EvalContext, EvalError, SymbolicModel


class View(enum.Enum):
    OBS = "obs"
    CLK = "clk"
    SPR = "spr"

    @classmethod
    def parse(cls, text: str) -> "View":
        try:
            return cls(text.lower())
        except ValueError:
            raise ValueError(f"unknown view {text!r}; choose one of obs, clk, spr") from None


@dataclass
class EpistemicStructure:
    """The states reachable at one time, with observation-based indistinguishability."""

    sym: SymbolicModel
    states: BddRef
    time: int = 0

    def observables(self, agent: str) -> Tuple[str, ...]:
        return self.sym.cm.agent_by_name[agent].observables

    def size(self) -> int:
        return self.sym.count(self.states)


class ShapeError(EvalError):
    pass


def sat_set(m: EpistemicStructure, phi: Expr, skel=None) -> BddRef:
    """States of ``m`` satisfying the atemporal formula ``phi``."""
    f = m.sym.formula(phi, EvalContext(slice=m.states, skel=skel))
    return m.sym.mgr.and_(m.states, f)


def check_obs_shape(m: EpistemicStructure, agent: str, psi: Expr) -> None:
    """``psi`` may mention only ``agent``'s observables outside its own knowledge operators."""
    obs = set(m.observables(agent))

    def rec(e: Expr) -> None:
        if isinstance(e, Knows):
            if not (isinstance(e.agent, Const) and e.agent.value == agent):
                raise ShapeError(f"knowledge of {e.agent} is not determined by {agent}'s observation")
            return
        if isinstance(e, Ref) and e.name not in obs:
            raise ShapeError(f"{e.name} is not observable by {agent}")
        if isinstance(e, SkelVar):
            return
        if isinstance(e, (Not,)):
            rec(e.arg)
        elif isinstance(e, (And, Or, Cmp)):
            rec(e.left)
            rec(e.right)

    rec(psi)


def obs_sat(m: EpistemicStructure, agent: str, psi: Expr, skel=None) -> BddRef:
    """Observations (as a set over the agent's observable bits) realized in ``m`` where ``psi`` holds."""
    check_obs_shape(m, agent, psi)
    return m.sym.observation_set(sat_set(m, psi, skel), agent)


def realized_observations(m: EpistemicStructure, agent: str) -> BddRef:
    return m.sym.observation_set(m.states, agent)


def local_state(view: View, trace: Trace, agent: str, t: int):
    if not 0 <= t < len(trace):
        raise IndexError(f"time {t} outside trace of length {len(trace)}")
    cm = trace.cm
    idx = [cm.index[g] for g in cm.agent_by_name[agent].observables]

    def obs(k: int):
        return tuple(trace.states[k][i] for i in idx)

    if view is View.OBS:
        return obs(t)
    if view is View.CLK:
        return (t, obs(t))
    return tuple(obs(k) for k in range(t + 1))


def formula_agents(phi: Expr) -> set:
    return {n.agent.value for n in walk(phi) if isinstance(n, Knows) and isinstance(n.agent, Const)}
