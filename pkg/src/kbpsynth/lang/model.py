"""Resolution of a parsed model into global state variables and resolved programs.

Source programs mention protocol-local names (parameters, locals, ``Self``);
the compiled form mentions global state variables only:

* environment variables keep their declared names, array elements become
  ``muddy[Child0]``;
* agent locals become ``Child0.presumed``;
* action variables are :class:`ActRef` nodes.

Quantifiers are expanded, ``otherwise`` is desugared and every agent program
is padded with ``skip`` to the joint length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

from .ast import (
    ActRef, And, Arm, Assign, Atomic, BoolType, Branch, Cmp, Const, Dot, EnumType,
    Expr, Index, Knows, Lit, Name, NamedType, Next, Not, Or, ProtocolDecl, Quant, RangeType,
    Ref, SkelVar, SKIP, Statement, SystemModel, TypeExpr, conj, disj, walk,
)
from .printer import format_expr

Value = Union[bool, int, str]


class ModelError(Exception):
    """A single static error, tagged with the rule it violates."""

    def __init__(self, rule: str, message: str, span=None, source: Optional[str] = None):
        self.rule = rule
        self.message = message
        self.span = span
        self.line = self.col = 0
        if span is not None and source is not None:
            pos = span[0]
            self.line = source.count("\n", 0, pos) + 1
            self.col = pos - (source.rfind("\n", 0, pos) + 1) + 1
        loc = f"{self.line}:{self.col}: " if self.line else ""
        super().__init__(f"{loc}[{rule}] {message}")


class ValidationError(Exception):
    def __init__(self, errors: Sequence[ModelError]):
        self.errors = list(errors)
        super().__init__("\n".join(str(e) for e in self.errors))


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Domain:
    kind: str  # 'bool' | 'enum' | 'range'
    values: Tuple[Value, ...]

    @property
    def bits(self) -> int:
        if self.kind == "bool":
            return 1
        return max(1, math.ceil(math.log2(len(self.values))))

    @property
    def is_dense(self) -> bool:
        return self.kind == "bool" or len(self.values) == (1 << self.bits)

    def encode(self, value: Value) -> Tuple[bool, ...]:
        if self.kind == "bool":
            return (bool(value),)
        i = self.values.index(value)
        n = self.bits
        return tuple(bool((i >> (n - 1 - b)) & 1) for b in range(n))

    def decode(self, bits: Sequence[bool]) -> Optional[Value]:
        if self.kind == "bool":
            return bool(bits[0])
        i = 0
        for b in bits:
            i = (i << 1) | int(b)
        return self.values[i] if i < len(self.values) else None

    @property
    def default(self) -> Value:
        return self.values[0]

    def contains(self, value: Value) -> bool:
        if self.kind == "bool":
            return isinstance(value, bool)
        if isinstance(value, bool):
            return False
        return value in self.values


BOOL = Domain("bool", (False, True))


@dataclass(frozen=True)
class StateVar:
    name: str
    domain: Domain
    owner: Optional[str] = None  # agent name for locals
    local: Optional[str] = None  # protocol-local name
    decl_order: int = 0

    @property
    def history_time(self) -> Optional[int]:
        if self.local and "@" in self.local:
            return int(self.local.rsplit("@", 1)[1])
        return None


@dataclass
class AgentInstance:
    name: str
    protocol: ProtocolDecl
    bindings: Dict[str, str]  # parameter -> env variable
    locals: Dict[str, str]  # local -> global name
    observables: Tuple[str, ...]  # global names
    program: Tuple[Statement, ...] = ()
    init: Expr = Lit(True)
    actions: Tuple[str, ...] = ()

    def scope_names(self) -> Dict[str, str]:
        out = dict(self.bindings)
        out.update(self.locals)
        return out

    def local_name_of(self) -> Dict[str, str]:
        """Global name -> protocol-local name for everything this agent can mention."""
        return {g: l for l, g in self.scope_names().items()}

    @property
    def observable_locals(self) -> Tuple[str, ...]:
        back = self.local_name_of()
        return tuple(back[g] for g in self.observables)


@dataclass
class CompiledModel:
    source: SystemModel
    vars: List[StateVar]
    agents: List[AgentInstance]
    env_init: Expr
    tau: Tuple[Statement, ...]
    actions: Tuple[Tuple[str, str], ...]
    length: int
    skel_formulas: Dict[SkelVar, Expr] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.index = {v.name: i for i, v in enumerate(self.vars)}
        self.var_by_name = {v.name: v for v in self.vars}
        self.agent_by_name = {a.name: a for a in self.agents}

    @property
    def agent_names(self) -> Tuple[str, ...]:
        return tuple(a.name for a in self.agents)

    def domain(self, name: str) -> Domain:
        return self.var_by_name[name].domain

    def env_var_names(self) -> List[str]:
        return [v.name for v in self.vars if v.owner is None]

    def statements_at(self, t: int) -> Dict[str, Statement]:
        return {a.name: (a.program[t] if t < len(a.program) else SKIP) for a in self.agents}

    @property
    def state_bits(self) -> int:
        return sum(v.domain.bits for v in self.vars)

    def resolve(self, e: Expr, agent: Optional[str] = None) -> Expr:
        """Resolve a source formula; in an agent's scope when ``agent`` is given."""
        c = Compiler(self.source)
        c.types, c.vars, c.var_names = self._compiler.types, self.vars, {v.name for v in self.vars}
        c.env_arrays, c.env_scalars = self._compiler.env_arrays, self._compiler.env_scalars
        c.symbols, c.actions_by_agent = self._compiler.symbols, self._compiler.actions_by_agent
        if agent is not None:
            sc = Scope(c, agent=self.agent_by_name[agent], allow_env=False)
        else:
            sc = Scope(c, allow_locals=True, allow_next=True)
        return c.resolve(e, sc)


# ---------------------------------------------------------------------------
# resolution


class Scope:
    """Name environment for resolving one expression."""

    def __init__(
        self,
        ctx: "Compiler",
        agent: Optional[AgentInstance] = None,
        allow_env: bool = True,
        allow_actions: bool = False,
        allow_locals: bool = False,
        allow_knows: bool = True,
        allow_next: bool = False,
        bound: Optional[Dict[str, Value]] = None,
        in_knows: bool = False,
    ):
        self.ctx = ctx
        self.agent = agent
        self.allow_env = allow_env
        self.allow_actions = allow_actions
        self.allow_locals = allow_locals
        self.allow_knows = allow_knows
        self.allow_next = allow_next
        self.bound = bound or {}
        self.in_knows = in_knows

    def derive(self, **kw) -> "Scope":
        s = Scope(self.ctx, self.agent, self.allow_env, self.allow_actions, self.allow_locals,
                  self.allow_knows, self.allow_next, dict(self.bound), self.in_knows)
        for k, v in kw.items():
            setattr(s, k, v)
        return s


class Compiler:
    def __init__(self, model: SystemModel):
        self.model = model
        self.errors: List[ModelError] = []
        self.types: Dict[str, Domain] = {}
        self.vars: List[StateVar] = []
        self.var_names: Set[str] = set()
        self.env_arrays: Dict[str, Tuple[Domain, Domain]] = {}
        self.env_scalars: Dict[str, Domain] = {}
        self.agents: List[AgentInstance] = []
        self.symbols: Set[str] = set()
        self.actions_by_agent: Dict[str, Set[str]] = {}
        self.skel_formulas: Dict[SkelVar, Expr] = {}

    def err(self, rule: str, message: str, node=None) -> ModelError:
        span = getattr(node, "span", None)
        return ModelError(rule, message, span, self.model.source)

    # -- declarations ---------------------------------------------------

    def domain_of(self, t: TypeExpr, node=None) -> Domain:
        if isinstance(t, BoolType):
            return BOOL
        if isinstance(t, EnumType):
            return Domain("enum", t.values)
        if isinstance(t, RangeType):
            return Domain("range", tuple(range(t.lo, t.hi + 1)))
        if isinstance(t, NamedType):
            if t.name == "Agent":
                return Domain("enum", self.model.agent_names)
            if t.name in self.types:
                return self.types[t.name]
            raise self.err("unknown-name", f"unknown type {t.name!r}", node)
        raise TypeError(t)

    def declare_types(self) -> None:
        for td in self.model.types:
            if td.name == "Agent":
                self.errors.append(self.err("duplicate", "type name 'Agent' is reserved", td))
                continue
            try:
                self.types[td.name] = self.domain_of(td.type, td)
            except ModelError as e:
                self.errors.append(e)
        self.symbols.update(self.model.agent_names)
        for dom in list(self.types.values()):
            if dom.kind == "enum":
                self.symbols.update(dom.values)  # type: ignore[arg-type]
        for d in self.model.env_vars:
            if isinstance(d.type, EnumType):
                self.symbols.update(d.type.values)
        for p in self.model.protocols:
            for q in p.params:
                if isinstance(q.type, EnumType):
                    self.symbols.update(q.type.values)
            for d in p.locals:
                if isinstance(d.type, EnumType):
                    self.symbols.update(d.type.values)

    def add_var(self, sv: StateVar, node=None) -> None:
        if sv.name in self.var_names:
            raise self.err("duplicate", f"variable {sv.name!r} declared twice", node)
        self.var_names.add(sv.name)
        self.vars.append(sv)

    def declare_env(self) -> None:
        for k, d in enumerate(self.model.env_vars):
            try:
                dom = self.domain_of(d.type, d)
                if d.array is None:
                    self.env_scalars[d.name] = dom
                    self.add_var(StateVar(d.name, dom, decl_order=k), d)
                else:
                    idx = self.domain_of(d.array, d)
                    self.env_arrays[d.name] = (idx, dom)
                    for v in idx.values:
                        self.add_var(StateVar(f"{d.name}[{_fmt_value(v)}]", dom, decl_order=k), d)
            except ModelError as e:
                self.errors.append(e)

    def declare_agents(self) -> None:
        protos = {p.name: p for p in self.model.protocols}
        for a in self.model.agents:
            p = protos.get(a.protocol)
            if p is None:
                self.errors.append(self.err("unknown-name", f"agent {a.name!r} uses unknown protocol {a.protocol!r}", a))
                continue
            if len(a.args) != len(p.params):
                self.errors.append(self.err(
                    "agent-binding",
                    f"agent {a.name!r} passes {len(a.args)} arguments to protocol {p.name!r} "
                    f"which takes {len(p.params)}", a))
                continue
            bindings: Dict[str, str] = {}
            ok = True
            for q, arg in zip(p.params, a.args):
                try:
                    r = self.resolve(arg, Scope(self, allow_knows=False))
                    if not isinstance(r, Ref) or r.name not in self.var_names:
                        raise self.err("agent-binding", f"argument for {q.name!r} must be an environment variable", arg)
                    pdom = self.domain_of(q.type, q)
                    vdom = self.var_domain(r.name)
                    if pdom != vdom:
                        raise self.err("type", f"parameter {q.name!r} of type {_fmt_domain(pdom)} bound to "
                                               f"{r.name} of type {_fmt_domain(vdom)}", arg)
                    bindings[q.name] = r.name
                except ModelError as e:
                    self.errors.append(e)
                    ok = False
            if not ok:
                continue
            loc: Dict[str, str] = {}
            for d in p.locals:
                try:
                    if d.array is not None:
                        raise self.err("type", "protocol locals cannot be arrays", d)
                    dom = self.domain_of(d.type, d)
                    g = f"{a.name}.{d.name}"
                    self.add_var(StateVar(g, dom, owner=a.name, local=d.name), d)
                    loc[d.name] = g
                except ModelError as e:
                    self.errors.append(e)
            observables = tuple(bindings[q.name] for q in p.params if q.observable) + tuple(loc.values())
            actions = sorted({at.action for st in p.body for at in _atomics(st) if at.action is not None})
            inst = AgentInstance(a.name, p, bindings, loc, observables, actions=tuple(actions))
            self.actions_by_agent[a.name] = set(actions)
            self.agents.append(inst)

    def var_domain(self, name: str) -> Domain:
        for v in self.vars:
            if v.name == name:
                return v.domain
        raise KeyError(name)

    # -- expressions ----------------------------------------------------

    def resolve(self, e: Expr, sc: Scope) -> Expr:
        if isinstance(e, Lit):
            return Const(e.value)
        if isinstance(e, (Const, Ref, ActRef)):
            return e
        if isinstance(e, Name):
            return self.resolve_name(e, sc)
        if isinstance(e, Index):
            idx = self.resolve(e.index, sc)
            if not isinstance(idx, Const):
                raise self.err("index", f"index of {e.base!r} must be a constant", e)
            if e.base not in self.env_arrays:
                raise self.err("unknown-name", f"{e.base!r} is not an array variable", e)
            if not sc.allow_env and not sc.in_knows:
                raise self.err("scope", f"{e.base}[...] is an environment variable, not visible here", e)
            idom, _ = self.env_arrays[e.base]
            if not idom.contains(idx.value):
                raise self.err("index", f"index {_fmt_value(idx.value)} out of range for {e.base!r}", e)
            return Ref(f"{e.base}[{_fmt_value(idx.value)}]")
        if isinstance(e, Dot):
            return self.resolve_dot(e, sc)
        if isinstance(e, Not):
            return Not(self.resolve(e.arg, sc))
        if isinstance(e, And):
            return And(self.resolve(e.left, sc), self.resolve(e.right, sc))
        if isinstance(e, Or):
            return Or(self.resolve(e.left, sc), self.resolve(e.right, sc))
        if isinstance(e, Cmp):
            r = Cmp(e.op, self.resolve(e.left, sc), self.resolve(e.right, sc))
            self.check_cmp(r, e)
            return r
        if isinstance(e, Knows):
            if not sc.allow_knows:
                raise self.err("knowledge", "knowledge operators are not allowed here", e)
            ag = self.resolve_agent(e.agent, sc)
            inner = sc.derive(in_knows=True)
            return Knows(Const(ag), self.resolve(e.arg, inner))
        if isinstance(e, Next):
            if not sc.allow_next:
                raise self.err("atemporal", "temporal operator X is not allowed here", e)
            return Next(self.resolve(e.arg, sc))
        if isinstance(e, Quant):
            dom = self.domain_of(e.type, e)
            parts = []
            for v in dom.values:
                b = dict(sc.bound)
                b[e.var] = v
                parts.append(self.resolve(e.body, sc.derive(bound=b)))
            return disj(parts) if e.kind == "exists" else conj(parts)
        if isinstance(e, SkelVar):
            if e not in self.skel_formulas:
                self.skel_formulas[e] = self.resolve(e.formula, sc)
            return e
        raise self.err("syntax", f"unexpected expression {e!r}", e)

    def resolve_agent(self, a: Expr, sc: Scope) -> str:
        if isinstance(a, Name):
            if a.id in sc.bound:
                v = sc.bound[a.id]
                if v in self.model.agent_names:
                    return v  # type: ignore[return-value]
                raise self.err("type", f"{a.id!r} is not bound to an agent", a)
            if a.id == "Self":
                if sc.agent is None:
                    raise self.err("scope", "'Self' used outside a protocol", a)
                return sc.agent.name
            if a.id in self.model.agent_names:
                return a.id
        if isinstance(a, Const) and a.value in self.model.agent_names:
            return a.value  # type: ignore[return-value]
        raise self.err("unknown-name", f"unknown agent {format_expr(a)!r}", a)

    def resolve_name(self, e: Name, sc: Scope) -> Expr:
        n = e.id
        if n in sc.bound:
            return Const(sc.bound[n])
        if n == "Self":
            if sc.agent is None:
                raise self.err("scope", "'Self' used outside a protocol", e)
            return Const(sc.agent.name)
        if sc.agent is not None:
            names = sc.agent.scope_names()
            if n in names:
                return Ref(names[n])
        if n in self.env_scalars:
            if sc.agent is not None and not sc.in_knows:
                raise self.err("scope", f"environment variable {n!r} is not a parameter of this protocol; "
                                        "it may only be mentioned inside a knowledge operator", e)
            if not sc.allow_env and not sc.in_knows:
                raise self.err("scope", f"environment variable {n!r} is not visible here", e)
            return Ref(n)
        if n in self.symbols:
            return Const(n)
        raise self.err("unknown-name", f"unknown name {n!r}", e)

    def resolve_dot(self, e: Dot, sc: Scope) -> Expr:
        owner = e.owner
        if owner == "Self" and sc.agent is not None:
            owner = sc.agent.name
        if owner in sc.bound:
            owner = sc.bound[owner]  # type: ignore[assignment]
        if owner not in self.model.agent_names:
            raise self.err("unknown-name", f"unknown agent {e.owner!r}", e)
        if sc.allow_actions:
            return ActRef(owner, e.member)
        if sc.allow_locals:
            g = f"{owner}.{e.member}"
            if g in self.var_names:
                return Ref(g)
            raise self.err("unknown-name", f"agent {owner!r} has no local variable {e.member!r}", e)
        raise self.err("scope", f"{owner}.{e.member} is not visible here", e)

    def term_domain(self, e: Expr) -> Optional[Domain]:
        if isinstance(e, Ref):
            return self.var_domain(e.name)
        if isinstance(e, Const):
            return BOOL if isinstance(e.value, bool) else None
        return BOOL

    def check_cmp(self, c: Cmp, node) -> None:
        ld, rd = self.term_domain(c.left), self.term_domain(c.right)
        if c.op not in ("==", "!="):
            for side, d in ((c.left, ld), (c.right, rd)):
                ok = (d is not None and d.kind == "range") or (isinstance(side, Const) and isinstance(side.value, int)
                                                               and not isinstance(side.value, bool))
                if not ok:
                    raise self.err("type", f"operator {c.op} needs numeric operands", node)
        for d, other in ((ld, c.right), (rd, c.left)):
            if d is not None and isinstance(other, Const) and not d.contains(other.value):
                raise self.err("type", f"constant {_fmt_value(other.value)} is not a value of {_fmt_domain(d)}", node)
        if ld is not None and rd is not None and not set(ld.values) & set(rd.values):
            raise self.err("type", "comparison between variables with disjoint types", node)

    def check_assign(self, target: str, value: Expr, node) -> None:
        tdom = self.var_domain(target)
        vd = self.term_domain(value)
        if isinstance(value, Const):
            if not tdom.contains(value.value):
                raise self.err("type", f"cannot assign {_fmt_value(value.value)} to {target} "
                                       f"of type {_fmt_domain(tdom)}", node)
        elif vd is not None and not set(vd.values) <= set(tdom.values):
            raise self.err("type", f"cannot assign a value of type {_fmt_domain(vd)} to {target} "
                                   f"of type {_fmt_domain(tdom)}", node)

    # -- statements -----------------------------------------------------

    def resolve_atomic(self, at: Atomic, sc: Scope, targets_ok, what: str) -> Atomic:
        out = []
        seen: Set[str] = set()
        for asg in at.assigns:
            t = self.resolve_target(asg.target, sc)
            if not targets_ok(t):
                raise self.err("assign-target", f"{what} may not assign {t}", asg)
            if t in seen:
                raise self.err("duplicate-target", f"{t} assigned twice in one atomic statement", asg)
            seen.add(t)
            v = self.resolve(asg.value, sc)
            self.check_assign(t, v, asg)
            out.append(Assign(Ref(t), v))
        return Atomic(at.action, tuple(out))

    def resolve_target(self, target: Expr, sc: Scope) -> str:
        if isinstance(target, Name) and sc.agent is not None:
            names = sc.agent.locals
            if target.id in names:
                return names[target.id]
            raise self.err("assign-target", f"{target.id!r} is not a local variable of this protocol", target)
        r = self.resolve(target, sc.derive(allow_knows=False))
        if not isinstance(r, Ref):
            raise self.err("assign-target", "assignment target must be a variable", target)
        return r.name

    def resolve_statement(self, st: Statement, sc: Scope, targets_ok, what: str) -> Statement:
        if isinstance(st, Atomic):
            return self.resolve_atomic(st, sc, targets_ok, what)
        arms = []
        for arm in st.effective_arms():
            g = self.resolve(arm.guard, sc)
            arms.append(Arm(g, self.resolve_atomic(arm.body, sc, targets_ok, what)))
        return Branch(tuple(arms))

    # -- driver ---------------------------------------------------------

    def run(self, programs: Optional[Dict[str, Tuple[Statement, ...]]] = None) -> CompiledModel:
        m = self.model
        self.declare_types()
        self.declare_env()
        self.declare_agents()
        env_names = {v.name for v in self.vars if v.owner is None}
        agent_names = set(m.agent_names)

        env_init: Expr = Const(True)
        if m.init is not None:
            try:
                env_init = self.resolve(m.init, Scope(self, allow_knows=False))
                self.check_formula(env_init, m.init)
            except ModelError as e:
                self.errors.append(e)

        tau: List[Statement] = []
        tau_scope = Scope(self, allow_actions=True, allow_knows=False)
        for st in m.transitions:
            try:
                rs = self.resolve_statement(st, tau_scope, lambda t: t in env_names, "the environment")
                for at in _atomics(rs):
                    if at.action is not None:
                        raise self.err("tau", "the environment program cannot emit actions", st)
                all_acts = set().union(*self.actions_by_agent.values()) if self.actions_by_agent else set()
                for sub in _exprs(rs):
                    for node in _walk(sub):
                        if isinstance(node, ActRef):
                            if node.agent not in agent_names:
                                raise self.err("unknown-name", f"unknown agent {node.agent!r}", st)
                            if node.action not in all_acts:
                                raise self.err("unknown-name", f"unknown action {node.action!r}", st)
                tau.append(rs)
            except ModelError as e:
                self.errors.append(e)

        length = m.length
        for inst in self.agents:
            p = inst.protocol
            sc = Scope(self, agent=inst, allow_env=False)
            own = set(inst.locals.values())
            init: Expr = Const(True)
            if p.init is not None:
                try:
                    init = self.resolve(p.init, sc.derive(allow_knows=False))
                    self.check_formula(init, p.init)
                except ModelError as e:
                    self.errors.append(e)
            inst.init = init
            body = programs[inst.name] if programs is not None else p.body
            prog: List[Statement] = []
            for st in body:
                try:
                    rs = self.resolve_statement(st, sc, lambda t: t in own, f"protocol {p.name!r}")
                    prog.append(rs)
                except ModelError as e:
                    self.errors.append(e)
            prog.extend([SKIP] * (length - len(prog)))
            inst.program = tuple(prog)

        if self.errors:
            raise ValidationError(self.errors)
        actions = tuple((a.name, act) for a in self.agents for act in a.actions)
        self.check_skeleton_ids()
        cm = CompiledModel(m, self.vars, self.agents, env_init, tuple(tau), actions, length,
                           dict(self.skel_formulas))
        cm._compiler = self
        return cm

    def check_skeleton_ids(self) -> None:
        from .transforms import skel_id
        seen: Dict[str, SkelVar] = {}
        for sv in self.skel_formulas:
            k = skel_id(sv)
            if k in seen and seen[k] != sv:
                raise ValidationError([self.err("skeleton", f"identifier collision for {k}")])
            seen[k] = sv

    def check_formula(self, f: Expr, node) -> None:
        if isinstance(f, Ref) and self.var_domain(f.name).kind != "bool":
            raise self.err("type", f"{f.name} is not boolean", node)


def _fmt_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _fmt_domain(d: Domain) -> str:
    if d.kind == "bool":
        return "Bool"
    if d.kind == "range":
        return f"{d.values[0]}..{d.values[-1]}"
    return "{" + ", ".join(str(v) for v in d.values) + "}"


def _atomics(st: Statement) -> Tuple[Atomic, ...]:
    if isinstance(st, Atomic):
        return (st,)
    out = tuple(a.body for a in st.arms)
    if st.otherwise is not None:
        out += (st.otherwise,)
    return out


def _exprs(st: Statement) -> List[Expr]:
    out: List[Expr] = []
    if isinstance(st, Branch):
        out.extend(a.guard for a in st.arms)
    for at in _atomics(st):
        out.extend(x.value for x in at.assigns)
    return out


def _walk(e: Expr):
    return walk(e)


def compile_model(model: SystemModel, programs: Optional[Dict[str, Tuple[Statement, ...]]] = None) -> CompiledModel:
    """Resolve ``model``; ``programs`` optionally overrides each agent's program (e.g. a skeleton)."""
    return Compiler(model).run(programs)


def format_value(v: Value) -> str:
    return _fmt_value(v)
