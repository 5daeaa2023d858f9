"""Source-to-source transforms: skeleton extraction, history variables, substitution."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Set, Tuple

from .ast import (
    And, Arm, Assign, Atomic, BoolType, Branch, Cmp, Dot, EnumType, Expr, Index, Knows, Lit, Name,
    NamedType, Next, Not, Or, Program, ProtocolDecl, Quant, RangeType, SkelVar, SKIP, Statement,
    SystemModel, TypeExpr, VarDecl, contains_knows, strip_spans,
)
from .model import ModelError
from .printer import format_expr


def skel_id(sv: SkelVar) -> str:
    """Stable identifier: agent, time and a structural hash of the formula."""
    h = hashlib.sha1(format_expr(sv.formula).encode()).hexdigest()[:10]
    return f"v_{sv.agent}_{sv.time}_{h}"


def observable_names(p: ProtocolDecl) -> Tuple[str, ...]:
    """Protocol-local observable names: observable parameters then every local."""
    return tuple(q.name for q in p.params if q.observable) + tuple(d.name for d in p.locals)


def _err(model: SystemModel, rule: str, msg: str, node) -> ModelError:
    return ModelError(rule, msg, getattr(node, "span", None), model.source)


# ---------------------------------------------------------------------------
# skeleton


@dataclass
class Skeleton:
    programs: Dict[str, Program]  # agent -> program containing SkelVar leaves
    vars: List[SkelVar]

    def vars_of(self, agent: str) -> List[SkelVar]:
        return [v for v in self.vars if v.agent == agent]


class _SkeletonBuilder:
    def __init__(self, model: SystemModel, agent: str, proto: ProtocolDecl):
        self.model = model
        self.agent = agent
        self.proto = proto
        self.obs = set(observable_names(proto))
        self.vars_ = {q.name for q in proto.params} | {d.name for d in proto.locals}
        self.found: List[SkelVar] = []

    def free_outside_knows(self, e: Expr, bound: Set[str]) -> Set[str]:
        if isinstance(e, Knows):
            return set()
        if isinstance(e, Name):
            return {e.id} if e.id in self.vars_ and e.id not in bound else set()
        if isinstance(e, Index):
            return {e.base} | self.free_outside_knows(e.index, bound)
        if isinstance(e, Dot):
            return {f"{e.owner}.{e.member}"}
        if isinstance(e, Quant):
            return self.free_outside_knows(e.body, bound | {e.var})
        out: Set[str] = set()
        for c in _kids(e):
            out |= self.free_outside_knows(c, bound)
        return out

    def own_knows_only(self, e: Expr) -> bool:
        """Every knowledge operator not nested in another one belongs to this agent."""
        if isinstance(e, Knows):
            a = e.agent
            return isinstance(a, Name) and a.id in ("Self", self.agent)
        return all(self.own_knows_only(c) for c in _kids(e))

    def replace(self, e: Expr, t: int, node) -> Expr:
        if not contains_knows(e):
            return e
        if isinstance(e, Next) or any(isinstance(n, Next) for n in _walk(e)):
            raise _err(self.model, "atemporal", "temporal operator inside a protocol condition", node)
        if self.own_knows_only(e) and self.free_outside_knows(e, set()) <= self.obs:
            sv = SkelVar(self.agent, t, strip_spans(e))
            if sv not in self.found:
                self.found.append(sv)
            return sv
        if isinstance(e, Not):
            return Not(self.replace(e.arg, t, node))
        if isinstance(e, And):
            return And(self.replace(e.left, t, node), self.replace(e.right, t, node))
        if isinstance(e, Or):
            return Or(self.replace(e.left, t, node), self.replace(e.right, t, node))
        if isinstance(e, Cmp):
            return Cmp(e.op, self.replace(e.left, t, node), self.replace(e.right, t, node))
        if isinstance(e, Knows):
            raise _err(self.model, "shape",
                       f"knowledge of agent {format_expr(e.agent)} cannot be decided from {self.agent}'s "
                       "observations", e)
        raise _err(self.model, "skeleton",
                   f"knowledge subformula {format_expr(e)!r} is not coverable by observable variables", e)

    def statement(self, st: Statement, t: int) -> Statement:
        if isinstance(st, Atomic):
            return self.atomic(st, t)
        if st.otherwise is not None and not any(contains_knows(a.guard) for a in st.arms):
            arms = tuple(Arm(self.replace(a.guard, t, a), self.atomic(a.body, t)) for a in st.arms)
            return Branch(arms, self.atomic(st.otherwise, t))
        arms = tuple(Arm(self.replace(a.guard, t, a), self.atomic(a.body, t)) for a in st.effective_arms())
        return Branch(arms)

    def atomic(self, at: Atomic, t: int) -> Atomic:
        if not any(contains_knows(x.value) for x in at.assigns):
            return at
        return Atomic(at.action, tuple(Assign(x.target, self.replace(x.value, t, x)) for x in at.assigns))


def _kids(e: Expr):
    if isinstance(e, (Not, Next)):
        return (e.arg,)
    if isinstance(e, (And, Or, Cmp)):
        return (e.left, e.right)
    if isinstance(e, Knows):
        return (e.arg,)
    if isinstance(e, Quant):
        return (e.body,)
    if isinstance(e, Index):
        return (e.index,)
    return ()


def _walk(e: Expr):
    yield e
    for c in _kids(e):
        yield from _walk(c)


def skeleton(model: SystemModel) -> Skeleton:
    """Replace maximal observable-determined knowledge subformulas by time-indexed variables."""
    programs: Dict[str, Program] = {}
    found: List[SkelVar] = []
    for a in model.agents:
        p = model.protocol(a.protocol)
        b = _SkeletonBuilder(model, a.name, p)
        programs[a.name] = tuple(b.statement(st, t) for t, st in enumerate(p.body))
        found.extend(b.found)
    ids: Dict[str, SkelVar] = {}
    for sv in found:
        k = skel_id(sv)
        if k in ids and ids[k] != sv:
            raise ModelError("skeleton", f"identifier collision for {k}")
        ids[k] = sv
    return Skeleton(programs, found)


# ---------------------------------------------------------------------------
# history variables


def _first_value(model: SystemModel, t: TypeExpr) -> Expr:
    if isinstance(t, BoolType):
        return Lit(False)
    if isinstance(t, RangeType):
        return Lit(t.lo)
    if isinstance(t, EnumType):
        return Name(t.values[0])
    if isinstance(t, NamedType):
        if t.name == "Agent":
            return Name(model.agent_names[0])
        for td in model.types:
            if td.name == t.name:
                return _first_value(model, td.type)
    raise ModelError("unknown-name", f"unknown type {t!r}")


def history_name(v: str, k: int) -> str:
    return f"{v}@{k}"


def history_transform(model: SystemModel, length: Optional[int] = None) -> SystemModel:
    """Record every observable's value at each time k in a fresh observable local ``v@k``.

    History variables start at the first value of their type so that states
    before time k carry no spurious variation.
    """
    m = model.length if length is None else length
    if m == 0:
        return model
    protos = []
    for p in model.protocols:
        # locals that already are history records need no history of their own
        obs = [(q.name, q.type) for q in p.params if q.observable]
        obs += [(d.name, d.type) for d in p.locals if "@" not in d.name]
        taken = {q.name for q in p.params} | {d.name for d in p.locals}
        new_locals = list(p.locals)
        init_parts = [p.init] if p.init is not None else []
        for k in range(m):
            for v, ty in obs:
                h = history_name(v, k)
                if h in taken:
                    raise _err(model, "history-collision", f"{h!r} already declared in protocol {p.name!r}", p)
                new_locals.append(VarDecl(h, ty))
                first = _first_value(model, ty)
                if isinstance(ty, BoolType):
                    init_parts.append(Not(Name(h)))
                else:
                    init_parts.append(Cmp("==", Name(h), first))
        body = list(p.body) + [SKIP] * (m - len(p.body))
        new_body = []
        for k, st in enumerate(body):
            beta = tuple(Assign(Name(history_name(v, k)), Name(v)) for v, _ in obs)
            new_body.append(_add_assigns(st, beta))
        init = init_parts[0] if init_parts else None
        for part in init_parts[1:]:
            init = And(init, part)
        protos.append(replace(p, locals=tuple(new_locals), init=init, body=tuple(new_body)))
    return replace(model, protocols=tuple(protos))


def _add_assigns(st: Statement, beta: Tuple[Assign, ...]) -> Statement:
    if isinstance(st, Atomic):
        return Atomic(st.action, st.assigns + beta)
    arms = tuple(Arm(a.guard, Atomic(a.body.action, a.body.assigns + beta)) for a in st.arms)
    other = st.otherwise if st.otherwise is not None else SKIP
    return Branch(arms, Atomic(other.action, other.assigns + beta))


# ---------------------------------------------------------------------------
# substitution


def substitute(model: SystemModel, skel: Skeleton, theta: Mapping[SkelVar, Expr]) -> SystemModel:
    """Replace skeleton variables by their images, giving a standard model.

    Agents sharing a protocol keep sharing it when their substituted programs
    coincide; otherwise each gets its own copy named ``proto_Agent``.
    """
    missing = [v for v in skel.vars if v not in theta]
    if missing:
        raise ModelError("substitution", f"no binding for {len(missing)} skeleton variable(s), "
                                         f"e.g. {skel_id(missing[0])}")
    progs: Dict[str, Program] = {}
    symbols = _symbols(model)
    for a in model.agents:
        p = model.protocol(a.protocol)
        obs = set(observable_names(p))
        for sv in skel.vars_of(a.name):
            bad = _names(theta[sv]) - obs - symbols
            if bad:
                raise ModelError("substitution", f"image of {skel_id(sv)} reads non-observable {sorted(bad)}")
        progs[a.name] = tuple(_subst_stmt(st, theta) for st in skel.programs[a.name])

    groups: Dict[Tuple[str, Program], List[str]] = {}
    for a in model.agents:
        groups.setdefault((a.protocol, progs[a.name]), []).append(a.name)
    protos: List[ProtocolDecl] = []
    agents = []
    used: Dict[str, int] = {}
    rename: Dict[str, str] = {}
    for (pname, prog), members in groups.items():
        p = model.protocol(pname)
        n = used.get(pname, 0)
        used[pname] = n + 1
        name = pname if n == 0 else f"{pname}_{members[0]}"
        protos.append(replace(p, name=name, body=prog))
        for ag in members:
            rename[ag] = name
    for a in model.agents:
        agents.append(replace(a, protocol=rename[a.name]))
    unused = [p for p in model.protocols if p.name not in {a.protocol for a in model.agents}]
    return replace(model, agents=tuple(agents), protocols=tuple(protos) + tuple(unused))


def _symbols(model: SystemModel) -> Set[str]:
    out = set(model.agent_names)
    types = [td.type for td in model.types] + [d.type for d in model.env_vars]
    for p in model.protocols:
        types += [q.type for q in p.params] + [d.type for d in p.locals]
    for t in types:
        if isinstance(t, EnumType):
            out.update(t.values)
    return out


def _names(e: Expr) -> Set[str]:
    return {n.id for n in _walk(e) if isinstance(n, Name)} - {"Self"}


def _subst_expr(e: Expr, theta: Mapping[SkelVar, Expr]) -> Expr:
    if isinstance(e, SkelVar):
        return theta[e]
    if isinstance(e, Not):
        return Not(_subst_expr(e.arg, theta))
    if isinstance(e, And):
        return And(_subst_expr(e.left, theta), _subst_expr(e.right, theta))
    if isinstance(e, Or):
        return Or(_subst_expr(e.left, theta), _subst_expr(e.right, theta))
    if isinstance(e, Cmp):
        return Cmp(e.op, _subst_expr(e.left, theta), _subst_expr(e.right, theta))
    return e


def _subst_stmt(st: Statement, theta: Mapping[SkelVar, Expr]) -> Statement:
    def at(a: Atomic) -> Atomic:
        if not a.assigns:
            return a
        return Atomic(a.action, tuple(Assign(x.target, _subst_expr(x.value, theta)) for x in a.assigns))

    if isinstance(st, Atomic):
        return at(st)
    return Branch(tuple(Arm(_subst_expr(a.guard, theta), at(a.body)) for a in st.arms),
                  at(st.otherwise) if st.otherwise is not None else None)
