"""Acceptance checks; each test prints one PASS/FAIL line for its criterion."""

import json
import random
import subprocess
import sys
import textwrap
import time

from kbpsynth.bdd import BddManager
from kbpsynth.corpus import corpus, election, muddy_clk, muddy_spr
from kbpsynth.demo import muddy_verdicts
from kbpsynth.lang import parse, parse_formula
from kbpsynth.lang.ast import strip_spans
from kbpsynth.lang.model import compile_model
from kbpsynth.oracle import (
    check_implementation, explicit_runs, explicit_synthesize, model_check_X, replay, symbolic_tables,
)
from kbpsynth.semantics import Evaluator, successors
from kbpsynth.symbolic import SymbolicModel
from kbpsynth.synthesis import synthesize

from helpers import (
    exists_table, expected_muddy_answers, from_table, knows_leader_not_top, muddy_behaviour,
    random_expr, table_of,
)

ALL_KNOW = "Forall x:Agent (Knows x muddy[x] \\/ Knows x neg muddy[x])"
SMALL_BITS = 12


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def small_corpus(view):
    out = {}
    for name, m in corpus().items():
        r = synthesize(m, view)
        if r.cm.state_bits <= SMALL_BITS:
            out[name] = (m, r)
    return out


def test_criterion_1_muddy_children_behaviour(capsys):
    bad = []
    timings = []
    for n in range(2, 7):
        t0 = time.perf_counter()
        got = muddy_behaviour(muddy_spr(n), "spr", n)
        timings.append(f"n={n} {time.perf_counter() - t0:.1f}s")
        if len(got) != 2 ** n - 1:
            bad.append(f"n={n}: {len(got)} initial states")
        for muddy, answers in got.items():
            if answers != expected_muddy_answers(muddy):
                bad.append(f"n={n} muddy={muddy}")
    report(capsys, 1, not bad, "; ".join(bad[:5]) or "exact for n=2..6 (" + ", ".join(timings) + ")")


def test_criterion_2_clock_and_recall_views_agree(capsys):
    bad = []
    for n in range(2, 7):
        spr = muddy_behaviour(muddy_spr(n), "spr", n)
        clk = muddy_behaviour(muddy_clk(n), "clk", n)
        if spr != clk:
            bad.append(f"n={n}: {sum(spr[k] != clk.get(k) for k in spr)} initial states differ")
    report(capsys, 2, not bad, "; ".join(bad) or "identical traces over all initial states for n=2..6")


def test_criterion_3_knowledge_completes_after_n_rounds(capsys):
    details = []
    ok = True
    for n in (3, 4, 5):
        m = parse(muddy_spr(n))
        at_n = model_check_X(m, "spr", f"X^{n} " + ALL_KNOW)
        before = model_check_X(m, "spr", ALL_KNOW, depth=n - 1)
        refuted = not before.holds
        if refuted:
            # a counterexample must be a genuine run ending outside the formula
            replay(before.trace.cm, before.trace.states)
        ok &= at_n.holds and refuted
        details.append(f"n={n}: X^{n} {'holds' if at_n.holds else 'REFUTED'}, "
                       f"X^{n - 1} {'refuted' if refuted else 'HOLDS (no counterexample)'}")
    report(capsys, 3, ok, "; ".join(details))


def test_criterion_4_synthesized_programs_implement_the_kbp(capsys):
    bad = []
    count = 0
    for name, m in corpus().items():
        for view in ("clk", "spr"):
            count += 1
            rep = check_implementation(m, synthesize(m, view).theta, view)
            if not rep.passed:
                bad.append(f"{name}/{view}")
    report(capsys, 4, not bad, ", ".join(bad) or f"{count} model/view pairs pass")


def test_criterion_5_variable_order_does_not_change_the_result(capsys):
    bad = []
    checked = 0
    for view in ("clk", "spr"):
        for name, (m, a) in small_corpus(view).items():
            checked += 1
            b = synthesize(m, view, reverse_agents=True)
            ta, tb = symbolic_tables(a), symbolic_tables(b)
            slices_a = [set(a.sym.states(S)) for S in a.slices]
            slices_b = [set(b.sym.states(S)) for S in b.slices]
            if ta != tb or slices_a != slices_b:
                bad.append(f"{name}/{view}")
    report(capsys, 5, not bad and checked > 0,
           ", ".join(bad) or f"{checked} model/view pairs with at most {SMALL_BITS} state bits agree")


def test_criterion_6_symbolic_synthesis_matches_explicit_oracle(capsys):
    bad = []
    checked = 0
    for view in ("clk", "spr"):
        for name, (m, r) in small_corpus(view).items():
            checked += 1
            ex = explicit_synthesize(m, view)
            if symbolic_tables(r) != ex.tables:
                bad.append(f"{name}/{view} tables")
            if [set(r.sym.states(S)) for S in r.slices] != ex.slices:
                bad.append(f"{name}/{view} slices")
            # image of the synthesized standard program against explicit successors
            cm = compile_model(r.standard_model)
            sym = SymbolicModel(cm)
            S = sym.initial_set()
            E = set(sym.states(S))
            ev = Evaluator(cm)
            for t in range(cm.length):
                S = sym.image(S, t)
                E = set().union(*(successors(cm, s, cm.statements_at(t), ev) for s in E))
                if set(sym.states(S)) != E:
                    bad.append(f"{name}/{view} image at {t}")
                    break
    report(capsys, 6, not bad and checked > 0, ", ".join(bad) or f"{checked} model/view pairs agree")


def _schedules(cm, runs, agents):
    return {tuple(next((t for t, s in enumerate(run) if s[cm.index[f"crashed[{a}]"]]), None) for a in agents)
            for run in runs}


def test_criterion_7_leader_election(capsys):
    n = 3
    agents = [f"A{i}" for i in range(1, n + 1)]
    target = strip_spans(parse_formula(f"Knows Self neg leader == {n}"))
    problems = []
    summary = []
    for k in (2, 3):
        for view in ("clk", "spr"):
            m = parse(election(n, k))
            r = synthesize(m, view)
            cm = compile_model(r.standard_model)
            runs = explicit_runs(cm, k)
            scheds = _schedules(cm, runs, agents)
            if len(scheds) != (k + 1) ** n:
                problems.append(f"(a) k={k} {view}: {len(scheds)} schedules")
            # (b) explicit oracle tables and symbolic tables against the characterization
            ex = explicit_synthesize(m, view)
            sym_tables = symbolic_tables(r)
            compared = 0
            for v, table in ex.tables.items():
                if v.formula != target:
                    continue
                i = int(v.agent[1:])
                if sym_tables[v] != table:
                    problems.append(f"(b) k={k} {view} {v.agent}@{v.time}: symbolic differs from oracle")
                for obs, val in table.items():
                    compared += 1
                    _, frm, msg, presumed = obs[:4]
                    if knows_leader_not_top(n, i, v.time, presumed, frm, msg) != val:
                        problems.append(f"(b) k={k} {view} {v.agent}@{v.time} obs={obs[:4]}")
            # (c) presumed leaders in every run
            bad_runs = 0
            for run in runs:
                sched = tuple(next((t for t, s in enumerate(run) if s[cm.index[f"crashed[{a}]"]]), None)
                              for a in agents)
                last = max([x for x in sched if x is not None], default=0)
                for t, s in enumerate(run):
                    leader = s[cm.index["leader"]]
                    for a in agents:
                        if s[cm.index[f"crashed[{a}]"]]:
                            continue
                        p = s[cm.index[f"{a}.presumed"]]
                        if p < leader or (t >= last + 2 and p != leader):
                            bad_runs += 1
            if bad_runs:
                problems.append(f"(c) k={k} {view}: {bad_runs} violations")
            summary.append(f"k={k} {view}: {len(scheds)} schedules, {compared} observations")
    report(capsys, 7, not problems, "; ".join(problems[:5]) or "; ".join(summary))


def test_criterion_8_bdd_engine(capsys):
    problems = []
    # exhaustive over all functions of up to three variables, pairwise
    m = BddManager()
    vs = m.declare("a", "b", "c")
    h = [from_table(m, t, vs) for t in range(256)]
    for ta in range(256):
        if m.not_(h[ta]) != h[255 ^ ta]:
            problems.append("not")
        for tb in range(256):
            if m.and_(h[ta], h[tb]) != h[ta & tb] or m.or_(h[ta], h[tb]) != h[ta | tb] \
                    or m.xor(h[ta], h[tb]) != h[ta ^ tb]:
                problems.append(f"binary {ta} {tb}")
    # every function of four variables: count and quantification
    m4 = BddManager()
    v4 = m4.declare("a", "b", "c", "d")
    for t in range(1 << 16):
        f = from_table(m4, t, v4)
        if m4.count(f, v4) != bin(t).count("1"):
            problems.append(f"count {t}")
        if t % 17 == 0 and any(table_of(m4, m4.exists(f, [v4[j]]), v4) != exists_table(t, j, 4) for j in range(4)):
            problems.append(f"exists {t}")
    # five variables on random functions, every assignment checked
    rng = random.Random(5)
    m5 = BddManager()
    v5 = m5.declare(*"abcde")
    for _ in range(2000):
        f, tf = random_expr(rng, m5, v5, 4)
        if table_of(m5, f, v5) != tf:
            problems.append("random 5-variable expression")
    # canonicity and reduction under 10^4 random expressions
    rng = random.Random(8)
    m6 = BddManager()
    v6 = m6.declare(*"abcdef")
    seen = {}
    for _ in range(10_000):
        f, tf = random_expr(rng, m6, v6, 5)
        if seen.setdefault(tf, f) != f:
            problems.append("two handles for one function")
    if len(set(seen.values())) != len(seen):
        problems.append("one handle for two functions")
    for mgr in (m, m4, m5, m6):
        mgr.check_invariants()
    report(capsys, 8, not problems, "; ".join(sorted(set(problems))[:5]) or
           f"truth tables agree; {len(seen)} distinct functions from 10^4 expressions, all canonical")


def test_criterion_9_update_model_agrees_with_model_checking(capsys):
    bad = []
    for n in (2, 3, 4):
        demo = muddy_verdicts(n, n, ALL_KNOW)
        m = parse(muddy_spr(n))
        checked = [model_check_X(m, "spr", ALL_KNOW, depth=k).holds for k in range(n + 1)]
        if demo != checked:
            bad.append(f"n={n}: updates {demo} vs model checking {checked}")
    report(capsys, 9, not bad, "; ".join(bad) or "verdicts agree after 0..n updates for n=2,3,4")


MEMORY_CAP_MB = 500
WALL_CAP_S = 600


def test_criterion_10_muddy_eight_fits_the_budget(capsys):
    script = textwrap.dedent("""
        import json, resource
        from kbpsynth.corpus import muddy_spr
        from kbpsynth.lang import parse
        from kbpsynth.synthesis import synthesize
        r = synthesize(parse(muddy_spr(8)), "spr")
        rss = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss // 1024
        print(json.dumps({"sizes": r.slice_sizes, "rss_mb": rss, "seconds": r.seconds}))
    """)
    t0 = time.perf_counter()
    try:
        res = subprocess.run([sys.executable, "-c", script], capture_output=True, text=True, timeout=WALL_CAP_S)
    except subprocess.TimeoutExpired:
        report(capsys, 10, False, f"did not finish within {WALL_CAP_S}s")
    wall = time.perf_counter() - t0
    if res.returncode != 0:
        report(capsys, 10, False, res.stderr.strip().splitlines()[-1])
    out = json.loads(res.stdout)
    ok = out["sizes"] == [255] * 8 and out["rss_mb"] <= MEMORY_CAP_MB and wall <= WALL_CAP_S
    report(capsys, 10, ok, f"n=8 in {wall:.0f}s, peak {out['rss_mb']} MB "
                           f"(caps {WALL_CAP_S}s, {MEMORY_CAP_MB} MB), slices {out['sizes']}")
