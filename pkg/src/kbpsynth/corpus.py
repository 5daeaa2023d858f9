"""Model generators and the bundled example models."""

from __future__ import annotations

from importlib import resources
from typing import Dict, List

from .lang.ast import SystemModel
from .lang.parser import parse


def _children(n: int) -> List[str]:
    return [f"Child{i}" for i in range(n)]


def _repeat_guard(n: int, guard: str, action: str) -> str:
    stmt = f"if {guard} -> << {action} >>\n[] otherwise -> skip fi"
    return ";\n".join([stmt] * n)


_KNOWS_MUDDY = "(Knows Self muddy[Self]) \\/ (Knows Self neg muddy[Self])"


def muddy_spr(n: int) -> str:
    """Muddy children where each child sees the others' latest answers (perfect recall version)."""
    if n < 2:
        raise ValueError("muddy children needs at least 2 children")
    kids = _children(n)
    lines = [
        "muddy: Bool[Agent]",
        "info: Bool[Agent]",
        "",
        "init_cond = (Exists x:Agent() (muddy[x])) /\\ Forall x:Agent() (info[x] == muddy[x])",
        "",
    ]
    for i, k in enumerate(kids):
        others = ", ".join(f"info[{kids[(i + j) % n]}]" for j in range(1, n))
        lines.append(f'agent {k} "child" ( {others} )')
    lines += ["", "transitions", "begin"]
    lines.append("; ".join(f"info[{k}] := {k}.SayYes" for k in kids))
    lines += ["end", ""]
    params = ", ".join(f"info{j}: observable Bool" for j in range(1, n))
    lines.append(f'protocol "child" ( {params} )')
    lines += ["begin", _repeat_guard(n, _KNOWS_MUDDY, "SayYes"), "end", ""]
    return "\n".join(lines)


def muddy_clk(n: int, persistent: bool = True) -> str:
    """Muddy children for the clock view: everyone's previous answers are observable.

    A clock-view child cannot recall when the first Yes came, so with the plain
    guard clean children lose their knowledge two rounds after the muddy ones
    answer.  ``persistent`` adds the child's own previous Yes to the guard,
    which keeps the answer stable once given.
    """
    if n < 2:
        raise ValueError("muddy children needs at least 2 children")
    kids = _children(n)
    lines = [
        "muddy: Bool[Agent]",
        "said: Bool[Agent]",
        "",
        "init_cond = (Exists x:Agent() (muddy[x])) /\\ Forall x:Agent() (neg said[x])",
        "",
    ]
    for i, k in enumerate(kids):
        seen = [f"muddy[{kids[(i + j) % n]}]" for j in range(1, n)]
        heard = [f"said[{kids[(i + j) % n]}]" for j in range(n)]
        lines.append(f'agent {k} "child" ( {", ".join(seen + heard)} )')
    lines += ["", "transitions", "begin"]
    lines.append("; ".join(f"said[{k}] := {k}.SayYes" for k in kids))
    lines += ["end", ""]
    params = [f"m{j}: observable Bool" for j in range(1, n)] + [f"s{j}: observable Bool" for j in range(n)]
    lines.append(f'protocol "child" ( {", ".join(params)} )')
    guard = f"{_KNOWS_MUDDY} \\/ s0" if persistent else _KNOWS_MUDDY
    lines += ["begin", _repeat_guard(n, guard, "SayYes"), "end", ""]
    return "\n".join(lines)


def election(n: int, steps: int) -> str:
    """Presumed-leader maintenance on a ring of ``n`` crash-prone agents A1..An."""
    if n < 2:
        raise ValueError("the election ring needs at least 2 agents")
    if steps < 1:
        raise ValueError("the election program needs at least one step")
    ags = [f"A{i}" for i in range(1, n + 1)]
    lines = [f"type LeaderNum = 0..{n}", ""]
    lines += [
        "crashed: Bool[Agent]",
        "leader: LeaderNum",
        "num: LeaderNum[Agent]",
        "from_f: LeaderNum[Agent]",
        "msg: LeaderNum[Agent]",
        "tf: LeaderNum",
        "tm: LeaderNum",
        "",
    ]
    init = [f"leader == {n}", "tf == 0", "tm == 0"]
    for i, a in enumerate(ags, 1):
        init += [f"neg crashed[{a}]", f"num[{a}] == {i}", f"from_f[{a}] == {i}", f"msg[{a}] == 0"]
    lines.append("init_cond = " + " /\\ ".join(init))
    lines.append("")
    for i, a in enumerate(ags, 1):
        lines.append(f'agent {a} "elect" ( crashed[{a}], num[{a}], from_f[{a}], msg[{a}] )')
    lines += ["", "transitions", "begin"]
    body: List[str] = []
    # crashes first; the skip arm comes first so the default resolver crashes nobody
    for a in ags:
        body.append(f"if true -> skip [] true -> crashed[{a}] := true fi")
    # the leader is the highest numbered agent still alive
    arms = []
    for i in range(n, 0, -1):
        alive_above = " /\\ ".join([f"crashed[A{j}]" for j in range(i + 1, n + 1)] + [f"neg crashed[A{i}]"])
        arms.append(f"{alive_above} -> leader := {i}")
    body.append("if " + "\n   [] ".join(arms) + "\n   [] otherwise -> leader := 0 fi")
    # the buffer of An is overwritten before A1 receives, so keep a copy
    body.append(f"<< | tf := from_f[A{n}], tm := msg[A{n}] >>")
    for r in range(n, 0, -1):
        s = n if r == 1 else r - 1
        sender = f"A{s}"
        recv = f"A{r}"
        arms = [
            f"neg crashed[{sender}] /\\ {sender}.Send{v} -> << | from_f[{recv}] := {s}, msg[{recv}] := {v} >>"
            for v in range(1, n + 1)
        ]
        src_f, src_m = ("tf", "tm") if r == 1 else (f"from_f[{sender}]", f"msg[{sender}]")
        arms.append(f"crashed[{sender}] -> << | from_f[{recv}] := {src_f}, msg[{recv}] := {src_m} >>")
        body.append("if " + "\n   [] ".join(arms) + " fi")
    body.append("<< | tf := 0, tm := 0 >>")
    lines.append(";\n".join(body))
    lines += ["end", ""]
    lines.append('protocol "elect" (crashed : Bool, my_num: observable LeaderNum,')
    lines.append("                 from_field: observable LeaderNum, message: observable LeaderNum)")
    lines += ["", "presumed: LeaderNum", "", f"init_cond = presumed == {n}", "", "begin"]
    stmts = []
    for _ in range(steps):
        arms = []
        for j in range(n, 0, -1):
            know_higher = [f"(Knows Self neg leader == {h})" for h in range(n, j, -1)]
            guard = " /\\ ".join(["(neg crashed)"] + know_higher + [f"neg Knows Self neg leader == {j}"])
            arms.append(f"{guard} -> << Send{j} | presumed := {j} >>")
        arms.append("otherwise -> skip")
        stmts.append("if " + "\n[] ".join(arms) + " fi")
    lines.append(";\n".join(stmts))
    lines += ["end", ""]
    return "\n".join(lines)


GENERATORS = {"muddy": muddy_spr, "muddy-clk": muddy_clk}


def generate(family: str, n: int, steps: int = 0, clk: bool = False) -> str:
    if family == "muddy":
        return muddy_clk(n) if clk else muddy_spr(n)
    if family == "election":
        return election(n, steps or n)
    raise ValueError(f"unknown family {family!r}; choose muddy or election")


def bundled_names() -> List[str]:
    root = resources.files("kbpsynth") / "models"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".kbp"))


def bundled(name: str) -> str:
    return (resources.files("kbpsynth") / "models" / name).read_text()


def corpus() -> Dict[str, SystemModel]:
    """Every bundled model plus small generated instances, parsed."""
    out = {name: parse(bundled(name)) for name in bundled_names()}
    for n in (2, 3):
        out[f"gen-muddy{n}"] = parse(muddy_spr(n))
        out[f"gen-muddy-clk{n}"] = parse(muddy_clk(n))
    out["gen-election2-1"] = parse(election(2, 1))
    out["gen-election2-2"] = parse(election(2, 2))
    return out
