"""Pretty-printer producing text the parser reads back to an equal AST."""

from __future__ import annotations

from typing import List

from .ast import (
    ActRef, And, Atomic, BoolType, Cmp, Const, Dot, EnumType, Expr, Index, Knows, Lit,
    Name, NamedType, Next, Not, Or, Program, ProtocolDecl, Quant, RangeType, Ref, SkelVar,
    Statement, SystemModel, TypeExpr, VarDecl,
)

_OR, _AND, _UNARY, _CMP, _ATOM = 1, 2, 3, 4, 5


def format_type(t: TypeExpr) -> str:
    if isinstance(t, BoolType):
        return "Bool"
    if isinstance(t, EnumType):
        return "{" + ", ".join(t.values) + "}"
    if isinstance(t, RangeType):
        return f"{t.lo}..{t.hi}"
    if isinstance(t, NamedType):
        return t.name
    raise TypeError(t)


def _prec(e: Expr) -> int:
    if isinstance(e, Or):
        return _OR
    if isinstance(e, And):
        return _AND
    if isinstance(e, (Not, Knows, Next)):
        return _UNARY
    if isinstance(e, Cmp):
        return _CMP
    return _ATOM


def _wrap(e: Expr, need: int) -> str:
    s = format_expr(e)
    return f"({s})" if _prec(e) < need else s


def format_expr(e: Expr) -> str:
    if isinstance(e, Lit):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return str(e.value)
    if isinstance(e, Const):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return str(e.value)
    if isinstance(e, Name):
        return e.id
    if isinstance(e, Ref):
        return e.name
    if isinstance(e, ActRef):
        return f"{e.agent}.{e.action}"
    if isinstance(e, Index):
        return f"{e.base}[{format_expr(e.index)}]"
    if isinstance(e, Dot):
        return f"{e.owner}.{e.member}"
    if isinstance(e, Or):
        return f"{_wrap(e.left, _OR)} \\/ {_wrap(e.right, _AND)}"
    if isinstance(e, And):
        return f"{_wrap(e.left, _AND)} /\\ {_wrap(e.right, _UNARY)}"
    if isinstance(e, Not):
        return f"neg {_wrap(e.arg, _UNARY)}"
    if isinstance(e, Knows):
        return f"Knows {format_expr(e.agent)} {_wrap(e.arg, _UNARY)}"
    if isinstance(e, Next):
        n, inner = 0, e
        while isinstance(inner, Next):
            n, inner = n + 1, inner.arg
        head = "X" if n == 1 else f"X^{n}"
        return f"{head} {_wrap(inner, _UNARY)}"
    if isinstance(e, Cmp):
        return f"{_wrap(e.left, _ATOM)} {e.op} {_wrap(e.right, _ATOM)}"
    if isinstance(e, Quant):
        kw = "Exists" if e.kind == "exists" else "Forall"
        return f"{kw} {e.var}:{format_type(e.type)} ({format_expr(e.body)})"
    if isinstance(e, SkelVar):
        return f"v[{e.agent},{e.time}]{{{format_expr(e.formula)}}}"
    raise TypeError(f"cannot format {e!r}")


def format_atomic(a: Atomic) -> str:
    if a.is_skip:
        return "skip"
    if a.action is None and len(a.assigns) == 1:
        asg = a.assigns[0]
        return f"{format_expr(asg.target)} := {format_expr(asg.value)}"
    inner = a.action or ""
    if a.assigns:
        body = ", ".join(f"{format_expr(x.target)} := {format_expr(x.value)}" for x in a.assigns)
        inner = f"{inner} | {body}" if inner else f"| {body}"
    return f"<< {inner} >>"


def format_statement(s: Statement, indent: str = "  ") -> str:
    if isinstance(s, Atomic):
        return indent + format_atomic(s)
    lines = []
    for k, arm in enumerate(s.arms):
        lead = "if " if k == 0 else "[] "
        lines.append(f"{indent}{lead}{format_expr(arm.guard)} -> {format_atomic(arm.body)}")
    if s.otherwise is not None:
        lines.append(f"{indent}[] otherwise -> {format_atomic(s.otherwise)}")
    lines[-1] += " fi"
    return "\n".join(lines)


def format_program(p: Program) -> str:
    if not p:
        return "begin\nend"
    body = ";\n".join(format_statement(s) for s in p)
    return f"begin\n{body}\nend"


def _var_decl(d: VarDecl) -> str:
    s = f"{d.name} : {format_type(d.type)}"
    if d.array is not None:
        s += f"[{format_type(d.array)}]"
    return s


def format_protocol(p: ProtocolDecl) -> str:
    params = ", ".join(
        f"{q.name}: {'observable ' if q.observable else ''}{format_type(q.type)}" for q in p.params
    )
    lines = [f'protocol "{p.name}" ({params})']
    lines.extend(_var_decl(d) for d in p.locals)
    if p.init is not None:
        lines.append(f"init_cond = {format_expr(p.init)}")
    lines.append(format_program(p.body))
    return "\n".join(lines)


def format_model(m: SystemModel) -> str:
    out: List[str] = []
    for t in m.types:
        out.append(f"type {t.name} = {format_type(t.type)}")
    if m.types:
        out.append("")
    for d in m.env_vars:
        out.append(_var_decl(d))
    if m.env_vars:
        out.append("")
    if m.init is not None:
        out.append(f"init_cond = {format_expr(m.init)}")
        out.append("")
    for a in m.agents:
        args = ", ".join(format_expr(x) for x in a.args)
        out.append(f'agent {a.name} "{a.protocol}" ({args})')
    if m.agents:
        out.append("")
    out.append("transitions")
    out.append(format_program(m.transitions))
    for p in m.protocols:
        out.append("")
        out.append(format_protocol(p))
    for s in m.specs:
        out.append("")
        out.append(f"spec = {format_expr(s.formula)}")
    return "\n".join(out) + "\n"
