"""Abstract syntax for environment models and (knowledge-based) protocols.

Nodes are frozen dataclasses.  ``span`` fields carry source offsets for
diagnostics and are excluded from equality, so two parses of equivalent text
compare equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator, Optional, Tuple, Union

Span = Optional[Tuple[int, int]]


def _span() -> Span:
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class BoolType:
    pass


@dataclass(frozen=True)
class EnumType:
    values: Tuple[str, ...]


@dataclass(frozen=True)
class RangeType:
    lo: int
    hi: int


@dataclass(frozen=True)
class NamedType:
    name: str


TypeExpr = Union[BoolType, EnumType, RangeType, NamedType]


# ---------------------------------------------------------------------------
# expressions and formulas


@dataclass(frozen=True)
class Lit:
    value: Union[bool, int]
    span: Span = _span()


@dataclass(frozen=True)
class Name:
    id: str
    span: Span = _span()


@dataclass(frozen=True)
class Index:
    base: str
    index: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Dot:
    """``Agent.action`` (an action variable) or ``Agent.local``."""

    owner: str
    member: str
    span: Span = _span()


@dataclass(frozen=True)
class Not:
    arg: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Cmp:
    op: str  # one of == != < <= > >=
    left: "Expr"
    right: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Knows:
    agent: "Expr"  # Name('Self'), an agent name, or a bound variable
    arg: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Next:
    arg: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class Quant:
    kind: str  # 'exists' | 'forall'
    var: str
    type: TypeExpr
    body: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class SkelVar:
    """Placeholder for a replaced knowledge subformula (agent, time, formula)."""

    agent: str
    time: int
    formula: "Expr"
    span: Span = _span()


# resolved leaves (produced by compilation, never by the parser)


@dataclass(frozen=True)
class Ref:
    """A global state variable, e.g. ``muddy[Child0]`` or ``Child0.presumed``."""

    name: str


@dataclass(frozen=True)
class ActRef:
    agent: str
    action: str


@dataclass(frozen=True)
class Const:
    """A typed constant: bool, int, or an enum/agent symbol."""

    value: Union[bool, int, str]


Expr = Union[Lit, Name, Index, Dot, Not, And, Or, Cmp, Knows, Next, Quant, SkelVar, Ref, ActRef, Const]

TRUE_LIT = Lit(True)
FALSE_LIT = Lit(False)


def children(e: Expr) -> Tuple[Expr, ...]:
    if isinstance(e, (Not, Next)):
        return (e.arg,)
    if isinstance(e, Knows):
        return (e.agent, e.arg)
    if isinstance(e, (And, Or, Cmp)):
        return (e.left, e.right)
    if isinstance(e, Quant):
        return (e.body,)
    if isinstance(e, Index):
        return (e.index,)
    return ()


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    for c in children(e):
        yield from walk(c)


def contains_knows(e: Expr) -> bool:
    return any(isinstance(n, (Knows, SkelVar)) for n in walk(e))


def contains_next(e: Expr) -> bool:
    return any(isinstance(n, Next) for n in walk(e))


def conj(items) -> Expr:
    items = list(items)
    if not items:
        return TRUE_LIT
    out = items[0]
    for it in items[1:]:
        out = And(out, it)
    return out


def disj(items) -> Expr:
    items = list(items)
    if not items:
        return FALSE_LIT
    out = items[0]
    for it in items[1:]:
        out = Or(out, it)
    return out


def strip_spans(e):
    """Copy of ``e`` with spans cleared (spans never affect equality anyway)."""
    if isinstance(e, (Lit, Name)):
        return replace(e, span=None)
    if isinstance(e, Index):
        return Index(e.base, strip_spans(e.index))
    if isinstance(e, Dot):
        return Dot(e.owner, e.member)
    if isinstance(e, Not):
        return Not(strip_spans(e.arg))
    if isinstance(e, Next):
        return Next(strip_spans(e.arg))
    if isinstance(e, And):
        return And(strip_spans(e.left), strip_spans(e.right))
    if isinstance(e, Or):
        return Or(strip_spans(e.left), strip_spans(e.right))
    if isinstance(e, Cmp):
        return Cmp(e.op, strip_spans(e.left), strip_spans(e.right))
    if isinstance(e, Knows):
        return Knows(strip_spans(e.agent), strip_spans(e.arg))
    if isinstance(e, Quant):
        return Quant(e.kind, e.var, e.type, strip_spans(e.body))
    if isinstance(e, SkelVar):
        return SkelVar(e.agent, e.time, strip_spans(e.formula))
    return e


# ---------------------------------------------------------------------------
# statements


@dataclass(frozen=True)
class Assign:
    target: Expr  # Name or Index
    value: Expr
    span: Span = _span()


@dataclass(frozen=True)
class Atomic:
    action: Optional[str]
    assigns: Tuple[Assign, ...] = ()
    span: Span = _span()

    @property
    def is_skip(self) -> bool:
        return self.action is None and not self.assigns


SKIP = Atomic(None, ())


@dataclass(frozen=True)
class Arm:
    guard: Expr
    body: Atomic
    span: Span = _span()


@dataclass(frozen=True)
class Branch:
    arms: Tuple[Arm, ...]
    otherwise: Optional[Atomic] = None
    span: Span = _span()

    def effective_arms(self) -> Tuple[Arm, ...]:
        """Arms with ``otherwise`` desugared to the negated disjunction of the guards."""
        if self.otherwise is None:
            return self.arms
        guard = Not(disj(a.guard for a in self.arms))
        return self.arms + (Arm(guard, self.otherwise),)


Statement = Union[Atomic, Branch]
Program = Tuple[Statement, ...]


def statement_atomics(stmt: Statement) -> Tuple[Atomic, ...]:
    if isinstance(stmt, Atomic):
        return (stmt,)
    out = tuple(a.body for a in stmt.arms)
    if stmt.otherwise is not None:
        out += (stmt.otherwise,)
    return out


# ---------------------------------------------------------------------------
# declarations


@dataclass(frozen=True)
class TypeDecl:
    name: str
    type: TypeExpr
    span: Span = _span()


@dataclass(frozen=True)
class VarDecl:
    name: str
    type: TypeExpr
    array: Optional[TypeExpr] = None  # index type for ``T[Agent]``
    span: Span = _span()


@dataclass(frozen=True)
class ParamDecl:
    name: str
    type: TypeExpr
    observable: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class AgentDecl:
    name: str
    protocol: str
    args: Tuple[Expr, ...]
    span: Span = _span()


@dataclass(frozen=True)
class ProtocolDecl:
    name: str
    params: Tuple[ParamDecl, ...]
    locals: Tuple[VarDecl, ...]
    init: Optional[Expr]
    body: Program
    span: Span = _span()

    @property
    def length(self) -> int:
        return len(self.body)


@dataclass(frozen=True)
class SpecDecl:
    formula: Expr
    span: Span = _span()


@dataclass(frozen=True)
class SystemModel:
    types: Tuple[TypeDecl, ...]
    env_vars: Tuple[VarDecl, ...]
    init: Optional[Expr]
    agents: Tuple[AgentDecl, ...]
    transitions: Program
    protocols: Tuple[ProtocolDecl, ...]
    specs: Tuple[SpecDecl, ...] = ()
    source: Optional[str] = field(default=None, compare=False, repr=False)

    def protocol(self, name: str) -> ProtocolDecl:
        for p in self.protocols:
            if p.name == name:
                return p
        raise KeyError(name)

    def agent(self, name: str) -> AgentDecl:
        for a in self.agents:
            if a.name == name:
                return a
        raise KeyError(name)

    @property
    def agent_names(self) -> Tuple[str, ...]:
        return tuple(a.name for a in self.agents)

    @property
    def is_knowledge_based(self) -> bool:
        return any(program_contains_knows(p.body) for p in self.protocols)

    @property
    def kind(self) -> str:
        return "knowledge-based" if self.is_knowledge_based else "standard"

    @property
    def length(self) -> int:
        """Joint program length: the longest protocol among the instantiated agents."""
        used = {a.protocol for a in self.agents}
        return max((p.length for p in self.protocols if p.name in used), default=0)

    def text_of(self, node) -> Optional[str]:
        span = getattr(node, "span", None)
        if self.source is None or span is None:
            return None
        return self.source[span[0]:span[1]]


def program_contains_knows(prog: Program) -> bool:
    for stmt in prog:
        if isinstance(stmt, Branch):
            if any(contains_knows(a.guard) for a in stmt.arms):
                return True
        for at in statement_atomics(stmt):
            if any(contains_knows(asg.value) for asg in at.assigns):
                return True
    return False
