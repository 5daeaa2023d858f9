"""Incremental synthesis of an implementation of a knowledge-based program.

Time slices S_0, S_1, ... are built forward.  At each time k every knowledge
condition of that time is evaluated on S_k, projected to the owning agent's
observations and turned into an expression; the step from S_k to S_{k+1}
then runs the statements of time k with those expressions in place.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .bdd import FALSE, TRUE, BddManager, BddRef, VarId
from .epistemic import EpistemicStructure, View, obs_sat, realized_observations
from .lang.ast import And, Cmp, Const, Expr, Lit, Name, Not, Or, Ref, SkelVar, SystemModel, conj, disj
from .lang.model import CompiledModel, compile_model
from .lang.printer import format_expr, format_model
from .lang.transforms import Skeleton, history_transform, skel_id, skeleton, substitute
from .symbolic import SymbolicModel

log = logging.getLogger(__name__)


@dataclass
class Condition:
    var: SkelVar
    expr: Expr  # resolved, over global observable names
    source: Expr  # over the protocol's own names
    bdd: BddRef  # the chosen cover, over observable bits
    care: BddRef  # realized observations
    care_count: int
    holds_on: BddRef  # realized observations where the formula holds


@dataclass
class SynthesisResult:
    view: View
    model: SystemModel  # after the history transform for spr
    skeleton: Skeleton
    cm: CompiledModel
    sym: SymbolicModel
    conditions: Dict[SkelVar, Condition]
    slices: List[BddRef]
    standard_model: SystemModel
    slice_sizes: List[int] = field(default_factory=list)
    slice_nodes: List[int] = field(default_factory=list)
    seconds: float = 0.0
    warnings: List[str] = field(default_factory=list)

    @property
    def theta(self) -> Dict[SkelVar, Expr]:
        return {v: c.source for v, c in self.conditions.items()}

    def condition_at(self, agent: str, t: int) -> List[Condition]:
        return [c for v, c in self.conditions.items() if v.agent == agent and v.time == t]


def _localize(e: Expr, names: Dict[str, str]) -> Expr:
    if isinstance(e, Ref):
        return Name(names[e.name])
    if isinstance(e, Const):
        return Lit(e.value) if isinstance(e.value, (bool, int)) else Name(e.value)
    if isinstance(e, Not):
        return Not(_localize(e.arg, names))
    if isinstance(e, And):
        return And(_localize(e.left, names), _localize(e.right, names))
    if isinstance(e, Or):
        return Or(_localize(e.left, names), _localize(e.right, names))
    if isinstance(e, Cmp):
        return Cmp(e.op, _localize(e.left, names), _localize(e.right, names))
    raise TypeError(e)


def _var_literal(sym: SymbolicModel, name: str, bits: Dict[VarId, bool]) -> Optional[Expr]:
    """Literal for a partial bit pattern on one variable, or None if unconstrained on valid values."""
    dom = sym.cm.domain(name)
    if dom.kind == "bool":
        (b, val), = bits.items()
        return Ref(name) if val else Not(Ref(name))
    ids = sym.bits[name]
    match = [v for v in dom.values if all(dom.encode(v)[ids.index(b)] == val for b, val in bits.items())]
    if len(match) == len(dom.values):
        return None
    if len(match) == 1:
        return Cmp("==", Ref(name), Const(match[0]))
    rest = [v for v in dom.values if v not in match]
    if len(rest) == 1:
        return Cmp("!=", Ref(name), Const(rest[0]))
    if dom.kind == "range":
        lo, hi = min(match), max(match)
        if len(match) == hi - lo + 1:
            if lo == dom.values[0]:
                return Cmp("<=", Ref(name), Const(hi))
            if hi == dom.values[-1]:
                return Cmp(">=", Ref(name), Const(lo))
            return And(Cmp(">=", Ref(name), Const(lo)), Cmp("<=", Ref(name), Const(hi)))
    return disj(Cmp("==", Ref(name), Const(v)) for v in match)


def cover_to_expr(sym: SymbolicModel, agent: str, cubes: List[Dict[VarId, bool]]) -> Expr:
    owner: Dict[VarId, str] = {}
    for g in sym.cm.agent_by_name[agent].observables:
        for b in sym.bits[g]:
            owner[b] = g
    terms = []
    for cube in cubes:
        per: Dict[str, Dict[VarId, bool]] = {}
        for b, val in cube.items():
            per.setdefault(owner[b], {})[b] = val
        lits = []
        for g in sym.cm.agent_by_name[agent].observables:
            if g in per:
                lit = _var_literal(sym, g, per[g])
                if lit is not None:
                    lits.append(lit)
        if not lits:
            return Const(True)
        terms.append(conj(lits))
    if not terms:
        return Const(False)
    return disj(terms)


def _size(cubes: List[Dict[VarId, bool]]) -> Tuple[int, int]:
    return (sum(len(c) for c in cubes), len(cubes))


def extract_condition(m: EpistemicStructure, agent: str, phi: Expr, skel=None) -> Condition:
    """An expression over ``agent``'s observables agreeing with ``phi`` on every realized observation."""
    sym, mgr = m.sym, m.sym.mgr
    f = obs_sat(m, agent, phi, skel)
    c = realized_observations(m, agent)
    on = mgr.and_(f, c)
    if on == FALSE:
        cubes, bdd = [], FALSE
    elif mgr.diff(c, f) == FALSE:
        cubes, bdd = [{}], TRUE
    else:
        fr = mgr.restrict(f, c)
        cand_a = mgr.isop(fr, fr)
        cand_b = mgr.isop(on, mgr.or_(f, mgr.not_(c)))
        cubes, bdd = min((cand_a, cand_b), key=lambda cb: _size(cb[0]))
    expr = cover_to_expr(sym, agent, cubes)
    sv = phi if isinstance(phi, SkelVar) else SkelVar(agent, m.time, phi)
    names = sym.cm.agent_by_name[agent].local_name_of()
    return Condition(sv, expr, _localize(expr, names), bdd, c,
                     mgr.count(c, sym.obs_bits[agent]), on)


def synthesize(model: SystemModel, view="clk", reverse_agents: bool = False,
               manager: Optional[BddManager] = None) -> SynthesisResult:
    view = View.parse(view) if isinstance(view, str) else view
    if view is View.OBS:
        raise ValueError("synthesis is supported for the clk and spr views only")
    started = time.perf_counter()
    compile_model(model)  # reports validation errors against the model as written
    work = history_transform(model) if view is View.SPR else model
    skel = skeleton(work)
    cm = compile_model(work, programs=skel.programs)
    sym = SymbolicModel(cm, manager, reverse_agents=reverse_agents)
    # a caller-supplied manager may hold handles we cannot see, so only sweep our own
    owns_manager = manager is None
    warnings: List[str] = []

    S = sym.initial_set()
    if S == FALSE:
        warnings.append("initial condition is unsatisfiable; all conditions set to false")
    last = max((v.time for v in skel.vars), default=-1)
    if not skel.vars:
        warnings.append("no knowledge conditions")
    slices = [S]
    conditions: Dict[SkelVar, Condition] = {}
    by_time: Dict[int, List[SkelVar]] = {}
    for v in skel.vars:
        by_time.setdefault(v.time, []).append(v)

    def resolver(v: SkelVar) -> BddRef:
        return conditions[v].bdd

    for k in range(last + 1):
        mk = EpistemicStructure(sym, S, k)
        for v in by_time.get(k, []):
            cond = extract_condition(mk, v.agent, cm.skel_formulas[v])
            cond.var = v
            conditions[v] = cond
            sym.mgr.trim_caches()
        log.debug("time %d: %d states, %d nodes", k, sym.count(S), sym.mgr.node_count(S))
        if k < last:
            S = sym.image(S, k, resolver)
            slices.append(S)
            if owns_manager:
                _collect(sym, slices, conditions)
                S = slices[-1]

    std = substitute(work, skel, {v: c.source for v, c in conditions.items()})
    res = SynthesisResult(view, work, skel, cm, sym, conditions, slices, std, warnings=warnings)
    res.slice_sizes = [sym.count(s) for s in slices]
    res.slice_nodes = [sym.mgr.node_count(s) for s in slices]
    res.seconds = time.perf_counter() - started
    return res


def _collect(sym: SymbolicModel, slices: List[BddRef], conditions: Dict[SkelVar, Condition]) -> None:
    conds = list(conditions.values())
    roots = list(slices) + [h for c in conds for h in (c.bdd, c.care, c.holds_on)]
    new = sym.collect(roots)
    slices[:] = new[:len(slices)]
    rest = iter(new[len(slices):])
    for c in conds:
        c.bdd, c.care, c.holds_on = next(rest), next(rest), next(rest)


def _one_line(text: str) -> str:
    return " ".join(text.split())


def sidecar(result: SynthesisResult) -> str:
    lines = ["agent\ttime\tformula\texpression\tcare"]
    for v, c in sorted(result.conditions.items(), key=lambda kv: (kv[0].agent, kv[0].time, skel_id(kv[0]))):
        lines.append("\t".join([v.agent, str(v.time), _one_line(format_expr(v.formula)),
                                format_expr(c.source), str(c.care_count)]))
    return "\n".join(lines) + "\n"


def emit(result: SynthesisResult) -> Tuple[str, str]:
    """The synthesized standard model as source text, and the condition table."""
    return format_model(result.standard_model), sidecar(result)


def read_sidecar(text: str) -> List[Tuple[str, int, Expr, Expr]]:
    from .lang.parser import parse_formula

    out = []
    for k, line in enumerate(text.splitlines()):
        if k == 0 or not line.strip():
            continue
        agent, t, formula, expr = line.split("\t")[:4]
        out.append((agent, int(t), parse_formula(formula), parse_formula(expr)))
    return out


def theta_from_sidecar(skel: Skeleton, rows) -> Dict[SkelVar, Expr]:
    from .lang.ast import strip_spans

    theta: Dict[SkelVar, Expr] = {}
    for agent, t, formula, expr in rows:
        theta[SkelVar(agent, t, strip_spans(formula))] = strip_spans(expr)
    return {v: theta[v] for v in skel.vars if v in theta}
