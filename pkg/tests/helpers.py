"""Shared oracles for the test suite: truth tables and muddy-children behaviour."""

from __future__ import annotations

import random
from typing import Dict, List, Sequence, Tuple

from kbpsynth.bdd import BddManager
from kbpsynth.lang import parse
from kbpsynth.lang.model import compile_model
from kbpsynth.oracle import enumerate_initial
from kbpsynth.semantics import simulate
from kbpsynth.synthesis import synthesize

# ---------------------------------------------------------------------------
# truth tables: bit i of the table is the value at assignment i, where
# variable j of the list takes bit j of i


def var_table(j: int, n: int) -> int:
    return sum(1 << i for i in range(1 << n) if (i >> j) & 1)


def full(n: int) -> int:
    return (1 << (1 << n)) - 1


def table_of(m: BddManager, f: int, vars: Sequence[int]) -> int:
    out = 0
    for i in range(1 << len(vars)):
        if m.evaluate(f, {v: bool((i >> j) & 1) for j, v in enumerate(vars)}):
            out |= 1 << i
    return out


def from_table(m: BddManager, table: int, vars: Sequence[int]) -> int:
    """Diagram of a truth table built by disjoining minterms."""
    f = 0
    for i in range(1 << len(vars)):
        if (table >> i) & 1:
            f = m.or_(f, m.cube_from({v: bool((i >> j) & 1) for j, v in enumerate(vars)}))
    return f


def exists_table(t: int, j: int, n: int) -> int:
    out = 0
    for i in range(1 << n):
        if (t >> i) & 1 or (t >> (i ^ (1 << j))) & 1:
            out |= 1 << i
    return out


def random_expr(rng: random.Random, m: BddManager, vars: Sequence[int], depth: int) -> Tuple[int, int]:
    """A random boolean expression as (diagram, truth table)."""
    n = len(vars)
    if depth == 0 or rng.random() < 0.2:
        k = rng.randrange(n + 2)
        if k == n:
            return 0, 0
        if k == n + 1:
            return 1, full(n)
        return m.var(vars[k]), var_table(k, n)
    op = rng.choice(["and", "or", "xor", "not", "ite", "exists"])
    a, ta = random_expr(rng, m, vars, depth - 1)
    if op == "not":
        return m.not_(a), full(n) ^ ta
    if op == "exists":
        j = rng.randrange(n)
        return m.exists(a, [vars[j]]), exists_table(ta, j, n)
    b, tb = random_expr(rng, m, vars, depth - 1)
    if op == "and":
        return m.and_(a, b), ta & tb
    if op == "or":
        return m.or_(a, b), ta | tb
    if op == "xor":
        return m.xor(a, b), ta ^ tb
    c, tc = random_expr(rng, m, vars, depth - 1)
    return m.ite(a, b, c), (ta & tb) | ((full(n) ^ ta) & tc)


# ---------------------------------------------------------------------------
# muddy children


def muddy_behaviour(src: str, view: str, n: int) -> Dict[Tuple[bool, ...], List[Tuple[bool, ...]]]:
    """Per muddy vector, the Yes/No answers of every child at rounds 1..n."""
    result = synthesize(parse(src), view)
    cm = compile_model(result.standard_model)
    out = {}
    for s0 in enumerate_initial(cm):
        trace = simulate(cm, s0, n)
        muddy = tuple(trace.value(0, f"muddy[Child{i}]") for i in range(n))
        out[muddy] = [tuple(acts[f"Child{i}"] == "SayYes" for i in range(n)) for acts in trace.actions]
    return out


def expected_muddy_answers(muddy: Tuple[bool, ...]) -> List[Tuple[bool, ...]]:
    n, k = len(muddy), sum(muddy)
    rounds = []
    for r in range(1, n + 1):
        if r < k:
            rounds.append((False,) * n)
        elif r == k:
            rounds.append(tuple(muddy))
        else:
            rounds.append((True,) * n)
    return rounds


# ---------------------------------------------------------------------------
# leader election characterization


def ring_between(n: int, j: int, i: int) -> List[int]:
    """Agents strictly between ``j`` and ``i`` going round the ring."""
    out, x = [], j % n + 1
    while x != i:
        out.append(x)
        x = x % n + 1
    return out


def knows_leader_not_top(n: int, i: int, t: int, presumed: int, frm: int, msg: int) -> bool:
    """Hand-written test for "agent i knows the top agent has crashed" at time t.

    Four ways to know: the agent already knew at the previous step (its
    presumed leader dropped below the top), a message reached it through a
    chain that must have passed the top agent, a message names a leader
    below the top, or the top agent's own buffer arrived empty.
    """
    if presumed < n:
        return True
    if t < 1:
        return False
    if i != n and frm != 0 and (frm == i or n in ring_between(n, frm, i)):
        return True
    if 1 <= msg < n:
        return True
    return frm == n and msg == 0
