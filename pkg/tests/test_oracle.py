import pytest

from kbpsynth.corpus import bundled, corpus, election, muddy_spr
from kbpsynth.lang import parse, parse_formula
from kbpsynth.lang.ast import Not
from kbpsynth.lang.model import compile_model
from kbpsynth.oracle import (
    OracleBoundError, check_implementation, enumerate_initial, explicit_runs, explicit_synthesize,
    model_check_X, replay, split_next, symbolic_tables,
)
from kbpsynth.synthesis import synthesize

ALL_KNOW = "Forall x:Agent (Knows x muddy[x] \\/ Knows x neg muddy[x])"


@pytest.mark.parametrize("name", sorted(corpus()))
@pytest.mark.parametrize("view", ["clk", "spr"])
def test_fresh_synthesis_passes_the_implementation_check(name, view):
    m = corpus()[name]
    report = check_implementation(m, synthesize(m, view).theta, view)
    assert report.passed, report.render()


def test_mutated_condition_fails_with_replayable_trace():
    m = parse(muddy_spr(3))
    theta = synthesize(m, "spr").theta
    v = sorted(theta, key=lambda v: (v.time, v.agent))[0]
    theta[v] = Not(theta[v])
    report = check_implementation(m, theta, "spr")
    assert not report.passed
    bad = [e for e in report.entries if not e.passed]
    assert bad[0].agent == v.agent and bad[0].time == v.time
    trace = bad[0].trace
    assert trace.states[-1] == bad[0].witness
    assert "FAIL" in report.render()
    # the trace is a genuine run of the checked program
    replay(trace.cm, trace.states)


def test_missing_condition_is_reported():
    m = parse(muddy_spr(2))
    theta = synthesize(m, "clk").theta
    theta.pop(next(iter(theta)))
    with pytest.raises(KeyError):
        check_implementation(m, theta, "clk")


def test_model_check_all_children_know_after_n_rounds():
    m = parse(muddy_spr(3))
    assert model_check_X(m, "spr", "X^3 " + ALL_KNOW).holds
    res = model_check_X(m, "spr", ALL_KNOW, depth=1)
    assert not res.holds and res.depth == 1
    cm = res.trace.cm
    assert len(res.trace) == 2 and res.trace.states[-1] == res.witness
    replay(cm, res.trace.states)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_everyone_knows_one_round_before_the_last(n):
    # with k muddy children everybody knows after k - 1 rounds of No, so the
    # last refuted depth is n - 2
    m = parse(muddy_spr(n))
    assert model_check_X(m, "spr", ALL_KNOW, depth=n - 1).holds
    res = model_check_X(m, "spr", ALL_KNOW, depth=n - 2)
    assert not res.holds
    replay(res.trace.cm, res.trace.states)
    assert len(res.trace) == n - 1


def test_model_check_rejects_deep_or_nested_next():
    m = parse(muddy_spr(2))
    with pytest.raises(ValueError, match="exceeds"):
        model_check_X(m, "spr", "X^5 " + ALL_KNOW)
    with pytest.raises(ValueError):
        split_next(parse_formula("X (p /\\ X q)"))
    assert split_next(parse_formula("X^2 p"))[0] == 2


def test_model_check_standard_model_under_obs():
    m = parse(bundled("toggle.kbp"))
    assert model_check_X(m, "obs", "X^3 level <= 2").holds
    assert not model_check_X(m, "obs", "X^1 neg x").holds


@pytest.mark.parametrize("name", ["bit.kbp", "muddy_round.kbp", "gen-muddy3", "muddy4.kbp"])
def test_explicit_and_symbolic_tables_agree(name):
    m = corpus()[name]
    r = synthesize(m, "clk")
    ex = explicit_synthesize(m, "clk")
    assert symbolic_tables(r) == ex.tables
    assert [set(r.sym.states(S)) for S in r.slices] == ex.slices


def test_oracle_bound_is_enforced():
    with pytest.raises(OracleBoundError):
        explicit_synthesize(parse(muddy_spr(4)), "clk", bound=5)
    with pytest.raises(OracleBoundError):
        enumerate_initial(compile_model(parse(muddy_spr(4))), bound=3)


def test_election_runs_cover_every_crash_schedule():
    cm = compile_model(synthesize(parse(election(3, 2)), "clk").standard_model)
    runs = explicit_runs(cm, 2)
    agents = ["A1", "A2", "A3"]
    scheds = {tuple(next((t for t, s in enumerate(run) if s[cm.index[f"crashed[{a}]"]]), None) for a in agents)
              for run in runs}
    assert len(scheds) == 27


def test_knowledge_free_check_is_vacuous():
    m = parse(bundled("toggle.kbp"))
    report = check_implementation(m, {}, "clk")
    assert report.passed and report.entries == []
