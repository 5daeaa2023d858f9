"""Recursive-descent parser for the model language."""

from __future__ import annotations

import re
from typing import List, NamedTuple, Optional, Tuple

from .ast import (
    And, Arm, Assign, AgentDecl, Atomic, BoolType, Branch, Cmp, Dot, EnumType, Expr, Index, Knows,
    Lit, Name, NamedType, Next, Not, Or, ParamDecl, ProtocolDecl, Quant, RangeType, SpecDecl,
    Statement, SystemModel, TypeDecl, TypeExpr, VarDecl,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.message = message
        self.line = line
        self.col = col


class Token(NamedTuple):
    kind: str  # 'id', 'int', 'str', 'sym', 'eof'
    text: str
    start: int
    end: int


KEYWORDS = {
    "type", "init_cond", "agent", "transitions", "begin", "end", "protocol", "observable",
    "if", "fi", "otherwise", "skip", "neg", "Knows", "Exists", "Forall", "true", "false",
    "Bool", "X", "spec",
}

_SYMBOLS = [
    "/\\", "\\/", "==", "!=", "<=", ">=", "<<", ">>", ":=", "->", "[]", "..",
    "<", ">", "|", "(", ")", "[", "]", "{", "}", ",", ";", ":", ".", "=", "^",
]

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<comment>(--|//)[^\n]*)"
    r'|(?P<str>"[^"\n]*")'
    r"|(?P<int>\d+(?![A-Za-z_]))"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_]*(?:@\d+)*)"
    r"|(?P<sym>" + "|".join(re.escape(s) for s in _SYMBOLS) + r")"
)


def tokenize(text: str) -> List[Token]:
    out: List[Token] = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            line, col = _line_col(text, pos)
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind in ("id", "int", "str", "sym"):
            out.append(Token(kind, m.group(), m.start(), m.end()))
        pos = m.end()
    out.append(Token("eof", "", n, n))
    return out


def _line_col(text: str, pos: int) -> Tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


_CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers -------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        line, col = _line_col(self.text, tok.start)
        return ParseError(message, line, col)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "id") and t.text == text

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Token:
        if not self.at(text):
            got = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {got!r}")
        t = self.tok
        self.i += 1
        return t

    def ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind != "id" or t.text in KEYWORDS:
            raise self.error(f"expected {what}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    def integer(self) -> int:
        t = self.tok
        if t.kind != "int":
            raise self.error(f"expected an integer, found {t.text!r}")
        self.i += 1
        return int(t.text)

    def _end(self) -> int:
        return self.toks[self.i - 1].end

    # -- top level -------------------------------------------------------

    def parse_model(self) -> SystemModel:
        types: List[TypeDecl] = []
        env_vars: List[VarDecl] = []
        init: Optional[Expr] = None
        agents: List[AgentDecl] = []
        transitions: Optional[Tuple[Statement, ...]] = None
        protocols: List[ProtocolDecl] = []
        specs: List[SpecDecl] = []
        names: dict = {}

        def declare(kind: str, name: str, tok: Token) -> None:
            key = (kind, name)
            if key in names:
                raise self.error(f"duplicate declaration of {kind} {name!r}", tok)
            names[key] = tok

        while self.tok.kind != "eof":
            start = self.tok
            if self.accept("type"):
                nt = self.ident("type name")
                self.expect("=")
                ty = self.parse_type()
                declare("type", nt.text, nt)
                types.append(TypeDecl(nt.text, ty, (start.start, self._end())))
            elif self.accept("init_cond"):
                if init is not None:
                    raise self.error("duplicate init_cond", start)
                self.expect("=")
                init = self.parse_formula()
            elif self.accept("agent"):
                nt = self.ident("agent name")
                pt = self.tok
                if pt.kind != "str":
                    raise self.error("expected a quoted protocol name")
                self.i += 1
                self.expect("(")
                args: List[Expr] = []
                if not self.at(")"):
                    args.append(self.parse_formula())
                    while self.accept(","):
                        args.append(self.parse_formula())
                self.expect(")")
                declare("agent", nt.text, nt)
                agents.append(AgentDecl(nt.text, pt.text[1:-1], tuple(args), (start.start, self._end())))
            elif self.accept("transitions"):
                if transitions is not None:
                    raise self.error("duplicate transitions clause", start)
                transitions = self.parse_program()
            elif self.accept("protocol"):
                p = self.parse_protocol(start)
                declare("protocol", p.name, start)
                protocols.append(p)
            elif self.accept("spec"):
                self.expect("=")
                f = self.parse_formula()
                specs.append(SpecDecl(f, (start.start, self._end())))
            else:
                d = self.parse_var_decl()
                declare("variable", d.name, start)
                env_vars.append(d)
        return SystemModel(
            types=tuple(types),
            env_vars=tuple(env_vars),
            init=init,
            agents=tuple(agents),
            transitions=transitions or (),
            protocols=tuple(protocols),
            specs=tuple(specs),
            source=self.text,
        )

    def parse_var_decl(self) -> VarDecl:
        nt = self.ident("declaration")
        self.expect(":")
        ty = self.parse_type()
        arr = None
        if self.accept("["):
            arr = self.parse_type()
            self.expect("]")
        return VarDecl(nt.text, ty, arr, (nt.start, self._end()))

    def parse_type(self) -> TypeExpr:
        if self.accept("Bool"):
            return BoolType()
        if self.accept("{"):
            vals = [self.ident("enumeration constant").text]
            while self.accept(","):
                vals.append(self.ident("enumeration constant").text)
            self.expect("}")
            if len(set(vals)) != len(vals):
                raise self.error("repeated enumeration constant")
            return EnumType(tuple(vals))
        if self.tok.kind == "int":
            lo = self.integer()
            self.expect("..")
            hi = self.integer()
            if hi < lo:
                raise self.error(f"empty range {lo}..{hi}")
            return RangeType(lo, hi)
        return NamedType(self.ident("type").text)

    def parse_protocol(self, start: Token) -> ProtocolDecl:
        pt = self.tok
        if pt.kind != "str":
            raise self.error("expected a quoted protocol name")
        self.i += 1
        self.expect("(")
        params: List[ParamDecl] = []
        seen = set()
        if not self.at(")"):
            while True:
                nt = self.ident("parameter name")
                self.expect(":")
                obs = bool(self.accept("observable"))
                ty = self.parse_type()
                if nt.text in seen:
                    raise self.error(f"duplicate declaration of parameter {nt.text!r}", nt)
                seen.add(nt.text)
                params.append(ParamDecl(nt.text, ty, obs, (nt.start, self._end())))
                if not self.accept(","):
                    break
        self.expect(")")
        local_decls: List[VarDecl] = []
        while not (self.at("begin") or self.at("init_cond")):
            d = self.parse_var_decl()
            if d.name in seen:
                raise self.error(f"duplicate declaration of local {d.name!r}")
            seen.add(d.name)
            local_decls.append(d)
        init = None
        if self.accept("init_cond"):
            self.expect("=")
            init = self.parse_formula()
        body = self.parse_program()
        return ProtocolDecl(pt.text[1:-1], tuple(params), tuple(local_decls), init, body,
                            (start.start, self._end()))

    # -- programs --------------------------------------------------------

    def parse_program(self) -> Tuple[Statement, ...]:
        self.expect("begin")
        stmts: List[Statement] = []
        if not self.at("end"):
            stmts.append(self.parse_statement())
            while self.accept(";"):
                if self.at("end"):
                    break
                stmts.append(self.parse_statement())
        self.expect("end")
        return tuple(stmts)

    def parse_statement(self) -> Statement:
        start = self.tok
        if self.accept("if"):
            arms: List[Arm] = []
            otherwise = None
            while True:
                at = self.tok
                if otherwise is not None:
                    raise self.error("'otherwise' must be the last arm", at)
                if self.accept("otherwise"):
                    self.expect("->")
                    otherwise = self.parse_atomic()
                else:
                    g = self.parse_formula()
                    self.expect("->")
                    body = self.parse_atomic()
                    arms.append(Arm(g, body, (at.start, self._end())))
                if not self.accept("[]"):
                    break
            if self.at("end") or self.at(";") or self.tok.kind == "eof":
                raise self.error("unterminated 'if' (missing 'fi')")
            self.expect("fi")
            if not arms:
                raise self.error("'if' needs at least one guarded arm", start)
            return Branch(tuple(arms), otherwise, (start.start, self._end()))
        if self.at("fi"):
            raise self.error("'fi' without matching 'if'")
        return self.parse_atomic()

    def parse_atomic(self) -> Atomic:
        start = self.tok
        if self.accept("skip"):
            return Atomic(None, (), (start.start, self._end()))
        if self.accept("<<"):
            action = None
            if self.tok.kind == "id" and self.tok.text not in KEYWORDS:
                action = self.ident().text
            assigns: List[Assign] = []
            if self.accept("|"):
                if not self.at(">>"):
                    assigns.append(self.parse_assign())
                    while self.accept(","):
                        assigns.append(self.parse_assign())
            self.expect(">>")
            return Atomic(action, tuple(assigns), (start.start, self._end()))
        a = self.parse_assign()
        return Atomic(None, (a,), (start.start, self._end()))

    def parse_assign(self) -> Assign:
        start = self.tok
        nt = self.ident("assignment target")
        target: Expr = Name(nt.text, (nt.start, nt.end))
        if self.accept("["):
            idx = self.parse_formula()
            self.expect("]")
            target = Index(nt.text, idx, (nt.start, self._end()))
        self.expect(":=")
        value = self.parse_formula()
        return Assign(target, value, (start.start, self._end()))

    # -- formulas --------------------------------------------------------

    def parse_formula(self) -> Expr:
        start = self.tok.start
        left = self.parse_and()
        while self.accept("\\/"):
            right = self.parse_and()
            left = Or(left, right, (start, self._end()))
        return left

    def parse_and(self) -> Expr:
        start = self.tok.start
        left = self.parse_unary()
        while self.accept("/\\"):
            right = self.parse_unary()
            left = And(left, right, (start, self._end()))
        return left

    def parse_unary(self) -> Expr:
        start = self.tok
        if self.accept("neg"):
            arg = self.parse_unary()
            return Not(arg, (start.start, self._end()))
        if self.accept("Knows"):
            at = self.ident("agent")
            agent = Name(at.text, (at.start, at.end))
            arg = self.parse_unary()
            return Knows(agent, arg, (start.start, self._end()))
        if self.accept("X"):
            times = 1
            if self.accept("^"):
                times = self.integer()
            arg = self.parse_unary()
            for _ in range(times):
                arg = Next(arg, (start.start, self._end()))
            return arg
        return self.parse_cmp()

    def parse_cmp(self) -> Expr:
        start = self.tok.start
        left = self.parse_primary()
        if self.tok.kind == "sym" and self.tok.text in _CMP_OPS:
            op = self.tok.text
            self.i += 1
            right = self.parse_primary()
            return Cmp(op, left, right, (start, self._end()))
        return left

    def parse_primary(self) -> Expr:
        t = self.tok
        if self.accept("("):
            f = self.parse_formula()
            self.expect(")")
            return f
        if self.accept("true"):
            return Lit(True, (t.start, t.end))
        if self.accept("false"):
            return Lit(False, (t.start, t.end))
        if t.kind == "int":
            self.i += 1
            return Lit(int(t.text), (t.start, t.end))
        if self.at("Exists") or self.at("Forall"):
            self.i += 1
            kind = "exists" if t.text == "Exists" else "forall"
            vt = self.ident("bound variable")
            self.expect(":")
            ty = self.parse_type()
            if self.at("(") and self.peek().kind == "sym" and self.peek().text == ")":
                self.i += 2
            body = self.parse_unary()
            return Quant(kind, vt.text, ty, body, (t.start, self._end()))
        nt = self.ident("expression")
        if self.accept("["):
            idx = self.parse_formula()
            self.expect("]")
            return Index(nt.text, idx, (nt.start, self._end()))
        if self.at(".") and self.peek().kind == "id":
            self.i += 1
            mt = self.ident("member")
            return Dot(nt.text, mt.text, (nt.start, self._end()))
        return Name(nt.text, (nt.start, nt.end))


def parse(text: str) -> SystemModel:
    """Parse a model document."""
    return Parser(text).parse_model()


def parse_formula(text: str) -> Expr:
    p = Parser(text)
    f = p.parse_formula()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r} after formula")
    return f


def parse_program(text: str) -> Tuple[Statement, ...]:
    p = Parser(text)
    prog = p.parse_program()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r} after program")
    return prog
