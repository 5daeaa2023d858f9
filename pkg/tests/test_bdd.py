import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kbpsynth.bdd import FALSE, TRUE, BddError, BddManager

from helpers import exists_table, from_table, full, random_expr, table_of


def manager(n):
    m = BddManager()
    return m, m.declare(*[f"x{i}" for i in range(n)])


def test_constants_and_literals():
    m, (a,) = manager(1)
    assert m.var(a) != m.nvar(a)
    assert m.not_(m.var(a)) == m.nvar(a)
    assert m.and_(m.var(a), m.nvar(a)) == FALSE
    assert m.or_(m.var(a), m.nvar(a)) == TRUE
    assert m.top(TRUE) is None and m.top(m.var(a)) == a


def test_duplicate_and_unknown_variables():
    m, _ = manager(2)
    with pytest.raises(BddError):
        m.add_var("x0")
    with pytest.raises(BddError):
        m.var("nope")
    with pytest.raises(BddError):
        m.var(7)


def test_binary_ops_exhaustive_three_vars():
    m, vs = manager(3)
    n = 3
    handles = [from_table(m, t, vs) for t in range(1 << (1 << n))]
    assert len(set(handles)) == len(handles)
    for ta, tb in itertools.product(range(256), repeat=2):
        a, b = handles[ta], handles[tb]
        assert m.and_(a, b) == handles[ta & tb]
        assert m.or_(a, b) == handles[ta | tb]
        assert m.xor(a, b) == handles[ta ^ tb]
    for ta in range(0, 256, 7):
        for tb in range(0, 256, 11):
            for tc in range(0, 256, 13):
                want = (ta & tb) | ((full(n) ^ ta) & tc)
                assert m.ite(handles[ta], handles[tb], handles[tc]) == handles[want]
    m.check_invariants()


def test_unary_ops_exhaustive_four_vars():
    m, vs = manager(4)
    n = 4
    for t in range(1 << (1 << n)):
        f = from_table(m, t, vs)
        if t % 97 == 0:
            assert m.not_(f) == from_table(m, full(n) ^ t, vs)
        assert table_of(m, m.not_(f), vs) == full(n) ^ t
        assert m.count(f, vs) == bin(t).count("1")
        if t % 13 == 0:
            for j in range(n):
                assert table_of(m, m.exists(f, [vs[j]]), vs) == exists_table(t, j, n)
    m.check_invariants()


@pytest.mark.parametrize("seed", range(5))
def test_random_ops_against_truth_tables_five_vars(seed):
    rng = random.Random(seed)
    m, vs = manager(5)
    n = 5
    for _ in range(300):
        a, ta = random_expr(rng, m, vs, 4)
        b, tb = random_expr(rng, m, vs, 4)
        assert table_of(m, a, vs) == ta
        assert table_of(m, m.diff(a, b), vs) == ta & (full(n) ^ tb)
        assert table_of(m, m.implies(a, b), vs) == (full(n) ^ ta) | tb
        assert table_of(m, m.iff(a, b), vs) == full(n) ^ (ta ^ tb)
        qs = rng.sample(range(n), rng.randint(1, 3))
        want = ta & tb
        for j in qs:
            want = exists_table(want, j, n)
        assert m.and_exists(a, b, [vs[j] for j in qs]) == m.exists(m.and_(a, b), [vs[j] for j in qs])
        assert table_of(m, m.and_exists(a, b, [vs[j] for j in qs]), vs) == want
        forall = full(n) ^ exists_table(full(n) ^ ta, qs[0], n)
        assert table_of(m, m.forall(a, [vs[qs[0]]]), vs) == forall
    m.check_invariants()


def test_canonicity_random_expressions():
    rng = random.Random(1234)
    m, vs = manager(6)
    by_table = {}
    for _ in range(10_000):
        f, t = random_expr(rng, m, vs, 5)
        assert by_table.setdefault(t, f) == f
    assert len(set(by_table.values())) == len(by_table)
    m.check_invariants()


def test_rename_and_relabel():
    m, (a, b, c, d) = manager(4)
    f = m.and_(m.var(a), m.nvar(c))
    assert m.rename(f, {a: b}) == m.and_(m.var(b), m.nvar(c))
    # swapping needs the general route
    g = m.and_(m.var(a), m.nvar(d))
    assert m.rename(g, {a: d, d: a}) == m.and_(m.var(d), m.nvar(a))
    with pytest.raises(BddError):
        m.rename(f, {a: c})
    with pytest.raises(BddError):
        m.rename(f, {a: b, c: b})


def test_restrict_agrees_on_care_set():
    rng = random.Random(7)
    m, vs = manager(5)
    for _ in range(200):
        f, tf = random_expr(rng, m, vs, 4)
        c, tc = random_expr(rng, m, vs, 3)
        if c == FALSE:
            with pytest.raises(BddError):
                m.restrict(f, c)
            continue
        r = m.restrict(f, c)
        assert table_of(m, r, vs) & tc == tf & tc
        assert m.node_count(r) <= m.node_count(f)


def test_isop_interval_and_irredundance():
    rng = random.Random(11)
    m, vs = manager(5)
    for _ in range(200):
        lo, tl = random_expr(rng, m, vs, 4)
        extra, te = random_expr(rng, m, vs, 3)
        hi = m.or_(lo, extra)
        cubes, f = m.isop(lo, hi)
        cover = m.disj(m.cube_from(c) for c in cubes)
        assert cover == f
        assert m.diff(lo, f) == FALSE and m.diff(f, hi) == FALSE
        for k in range(len(cubes)):
            rest = m.disj(m.cube_from(c) for j, c in enumerate(cubes) if j != k)
            assert m.diff(lo, rest) != FALSE or m.diff(m.cube_from(cubes[k]), lo) != FALSE
    with pytest.raises(BddError):
        m.isop(TRUE, FALSE)


def test_count_enumerate_pick():
    m, vs = manager(4)
    f = m.or_(m.and_(m.var(vs[0]), m.var(vs[1])), m.var(vs[3]))
    sats = list(m.enumerate_sats(f, vs))
    assert len(sats) == m.count(f, vs) == len({tuple(sorted(s.items())) for s in sats})
    assert all(m.evaluate(f, s) for s in sats)
    assert m.evaluate(f, m.pick_one(f) | {v: False for v in vs if v not in m.pick_one(f)})
    assert m.pick_one(FALSE) is None
    with pytest.raises(BddError):
        m.count(f, vs[:2])


def test_collect_keeps_roots_and_drops_garbage():
    rng = random.Random(3)
    m, vs = manager(6)
    exprs = [random_expr(rng, m, vs, 5) for _ in range(200)]
    keep = [f for f, _ in exprs[:10]]
    tables = [t for _, t in exprs[:10]]
    before = m.table_size
    new = m.collect(keep)
    assert m.table_size <= before
    assert [table_of(m, f, vs) for f in new] == tables
    m.check_invariants()
    # the rebuilt table still hash-conses
    assert m.and_(new[0], TRUE) == new[0]
    f, t = random_expr(rng, m, vs, 4)
    assert table_of(m, f, vs) == t


def test_transfer_between_managers():
    m, vs = manager(3)
    f = m.xor(m.var(vs[0]), m.and_(m.var(vs[1]), m.var(vs[2])))
    m2 = BddManager()
    m2.declare("x2", "x1", "x0")
    g = m.transfer(f, m2)
    assert m2.count(g, ["x0", "x1", "x2"]) == m.count(f, vs)


def test_to_dot_mentions_every_node():
    m, vs = manager(3)
    f = m.or_(m.var(vs[0]), m.var(vs[2]))
    dot = m.to_dot(f)
    assert dot.startswith("digraph") and dot.count("label=\"x") == m.node_count(f)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, (1 << 16) - 1), st.integers(0, (1 << 16) - 1))
def test_property_de_morgan_and_absorption(ta, tb):
    m, vs = manager(4)
    a, b = from_table(m, ta, vs), from_table(m, tb, vs)
    assert m.not_(m.and_(a, b)) == m.or_(m.not_(a), m.not_(b))
    assert m.or_(a, m.and_(a, b)) == a
    assert m.xor(a, b) == m.xor(b, a)
    assert m.count(a, vs) + m.count(m.not_(a), vs) == 16


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(st.integers(0, 4), min_size=1, max_size=3, unique=True))
def test_property_exists_is_union_of_cofactors(t, qs):
    m, vs = manager(5)
    f = from_table(m, t, vs)
    want = t
    for j in qs:
        want = exists_table(want, j, 5)
    assert table_of(m, m.exists(f, [vs[j] for j in qs]), vs) == want
    c = m.cofactor(f, {vs[qs[0]]: True})
    assert vs[qs[0]] not in m.support(c)
