"""Explicit epistemic models and the event-model product update.

Used as a second, non-symbolic route to knowledge verdicts for models whose
propositions never change, such as the muddy children.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, Optional, Sequence, Set, Tuple

from .lang.ast import And, Const, Expr, Index, Knows, Lit, Name, Not, Or, Quant, Ref, conj, disj
from .lang.parser import parse_formula

World = Hashable


@dataclass
class ExplicitModel:
    worlds: List[World]
    agents: Tuple[str, ...]
    # agent -> world -> class key; worlds with equal keys are indistinguishable
    classes: Dict[str, Dict[World, Hashable]]
    val: Dict[World, Dict[str, bool]]

    def related(self, agent: str, w: World) -> List[World]:
        k = self.classes[agent][w]
        return [x for x in self.worlds if self.classes[agent][x] == k]

    def blocks(self, agent: str) -> Dict[Hashable, List[World]]:
        out: Dict[Hashable, List[World]] = {}
        for w in self.worlds:
            out.setdefault(self.classes[agent][w], []).append(w)
        return out


@dataclass
class UpdateStructure:
    events: List[Hashable]
    classes: Dict[str, Dict[Hashable, Hashable]]
    pre: Dict[Hashable, Expr]


def sat(m: ExplicitModel, phi: Expr) -> Set[World]:
    """Worlds of ``m`` satisfying ``phi`` (propositions are ``Ref`` nodes)."""
    if isinstance(phi, Const):
        return set(m.worlds) if phi.value else set()
    if isinstance(phi, Ref):
        return {w for w in m.worlds if m.val[w].get(phi.name, False)}
    if isinstance(phi, Not):
        return set(m.worlds) - sat(m, phi.arg)
    if isinstance(phi, And):
        return sat(m, phi.left) & sat(m, phi.right)
    if isinstance(phi, Or):
        return sat(m, phi.left) | sat(m, phi.right)
    if isinstance(phi, Knows):
        agent = phi.agent.value
        inner = sat(m, phi.arg)
        out: Set[World] = set()
        for members in m.blocks(agent).values():
            if all(w in inner for w in members):
                out.update(members)
        return out
    raise TypeError(f"cannot evaluate {phi!r} in an explicit model")


def apply_update(m: ExplicitModel, u: UpdateStructure, minimize: bool = False) -> ExplicitModel:
    pre = {e: sat(m, u.pre[e]) for e in u.events}
    worlds = [(w, e) for w in m.worlds for e in u.events if w in pre[e]]
    classes = {
        a: {(w, e): (m.classes[a][w], u.classes[a][e]) for (w, e) in worlds} for a in m.agents
    }
    val = {(w, e): m.val[w] for (w, e) in worlds}
    out = ExplicitModel(worlds, m.agents, classes, val)
    return quotient(out)[0] if minimize else out


def check_update_formula(m: ExplicitModel, S: Iterable[World], u: UpdateStructure,
                         T: Iterable[Hashable], phi: Expr) -> bool:
    T = list(T)
    if not T:
        return True
    mu = apply_update(m, u)
    good = sat(mu, phi)
    live = set(mu.worlds)
    return all((w, e) in good for w in S for e in T if (w, e) in live)


def quotient(m: ExplicitModel) -> Tuple[ExplicitModel, Dict[World, int]]:
    """Minimize under bisimulation by partition refinement.

    Blocks start from the valuation and are split by the set of blocks each
    agent considers possible, until nothing changes.
    """
    def label(w):
        return tuple(sorted(m.val[w].items()))

    block: Dict[World, int] = {}
    ids: Dict[Hashable, int] = {}
    for w in m.worlds:
        block[w] = ids.setdefault(label(w), len(ids))
    agent_blocks = {a: m.blocks(a) for a in m.agents}
    while True:
        ids = {}
        new: Dict[World, int] = {}
        for w in m.worlds:
            sig = (block[w],) + tuple(
                frozenset(block[x] for x in agent_blocks[a][m.classes[a][w]]) for a in m.agents
            )
            new[w] = ids.setdefault(sig, len(ids))
        if len(set(new.values())) == len(set(block.values())):
            block = new
            break
        block = new
    worlds = sorted(set(block.values()))
    rep = {}
    for w in m.worlds:
        rep.setdefault(block[w], w)
    # classes of the quotient: union-find over blocks related through any member
    classes: Dict[str, Dict[World, Hashable]] = {}
    for a in m.agents:
        parent = {b: b for b in worlds}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for members in agent_blocks[a].values():
            bs = [block[w] for w in members]
            for b in bs[1:]:
                parent[find(b)] = find(bs[0])
        classes[a] = {b: find(b) for b in worlds}
    val = {b: m.val[rep[b]] for b in worlds}
    return ExplicitModel(worlds, m.agents, classes, val), block


def resolve_props(e: Expr, agents: Sequence[str]) -> Expr:
    """Turn a parsed formula into one over propositions, expanding agent quantifiers."""
    def rec(x: Expr, bound: Dict[str, str]) -> Expr:
        if isinstance(x, Lit):
            return Const(x.value)
        if isinstance(x, Name):
            return Ref(bound.get(x.id, x.id))
        if isinstance(x, Index):
            idx = x.index
            key = bound.get(idx.id, idx.id) if isinstance(idx, Name) else str(getattr(idx, "value", idx))
            return Ref(f"{x.base}[{key}]")
        if isinstance(x, Not):
            return Not(rec(x.arg, bound))
        if isinstance(x, And):
            return And(rec(x.left, bound), rec(x.right, bound))
        if isinstance(x, Or):
            return Or(rec(x.left, bound), rec(x.right, bound))
        if isinstance(x, Knows):
            a = x.agent.id if isinstance(x.agent, Name) else x.agent.value
            return Knows(Const(bound.get(a, a)), rec(x.arg, bound))
        if isinstance(x, Quant):
            parts = [rec(x.body, {**bound, x.var: a}) for a in agents]
            return conj(parts) if x.kind == "forall" else disj(parts)
        raise TypeError(f"unsupported formula node {x!r}")

    return rec(e, {})


# ---------------------------------------------------------------------------
# muddy children


def muddy_initial(n: int) -> ExplicitModel:
    agents = tuple(f"Child{i}" for i in range(n))
    worlds = [w for w in itertools.product((False, True), repeat=n) if any(w)]
    classes = {a: {w: w[:i] + w[i + 1:] for w in worlds} for i, a in enumerate(agents)}
    val = {w: {f"muddy[{a}]": w[i] for i, a in enumerate(agents)} for w in worlds}
    return ExplicitModel(worlds, agents, classes, val)


KNOWS_OWN = "Knows {a} muddy[{a}] \\/ Knows {a} neg muddy[{a}]"


def muddy_update(n: int) -> UpdateStructure:
    """One round of public answers: events are answer vectors, seen by everyone."""
    agents = [f"Child{i}" for i in range(n)]
    knows = [resolve_props(parse_formula(KNOWS_OWN.format(a=a)), agents) for a in agents]
    events = list(itertools.product((0, 1), repeat=n))
    pre = {e: conj(k if bit else Not(k) for k, bit in zip(knows, e)) for e in events}
    classes = {a: {e: e for e in events} for a in agents}
    return UpdateStructure(events, classes, pre)


def muddy_verdicts(n: int, rounds: int, phi: Optional[str] = None, minimize: bool = True) -> List[bool]:
    """Whether ``phi`` holds in every world after 0..rounds public answer rounds."""
    agents = [f"Child{i}" for i in range(n)]
    text = phi or "Forall x:Agent() (Knows x muddy[x] \\/ Knows x neg muddy[x])"
    f = resolve_props(parse_formula(text), agents)
    m = muddy_initial(n)
    u = muddy_update(n)
    out = [sat(m, f) == set(m.worlds)]
    for _ in range(rounds):
        m = apply_update(m, u, minimize=minimize)
        out.append(sat(m, f) == set(m.worlds))
    return out
