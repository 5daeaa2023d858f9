import pytest

from kbpsynth.bdd import FALSE, BddManager
from kbpsynth.corpus import bundled, corpus, muddy_spr
from kbpsynth.epistemic import EpistemicStructure, obs_sat
from kbpsynth.lang import format_expr, format_model, parse
from kbpsynth.lang.ast import strip_spans
from kbpsynth.lang.model import compile_model
from kbpsynth.lang.transforms import skeleton, history_transform
from kbpsynth.oracle import check_implementation
from kbpsynth.synthesis import emit, read_sidecar, synthesize, theta_from_sidecar


def test_knowledge_free_model_is_emitted_unchanged():
    m = parse(bundled("toggle.kbp"))
    r = synthesize(m, "clk")
    assert "no knowledge conditions" in r.warnings
    program, side = emit(r)
    assert program == format_model(m)
    assert side.splitlines() == ["agent\ttime\tformula\texpression\tcare"]


def test_obs_view_is_rejected():
    with pytest.raises(ValueError, match="clk and spr"):
        synthesize(parse(muddy_spr(2)), "obs")


def test_unsatisfiable_initial_condition():
    src = muddy_spr(2).replace("init_cond = ", "init_cond = false /\\ ")
    r = synthesize(parse(src), "clk")
    assert any("unsatisfiable" in w for w in r.warnings)
    assert all(format_expr(c.source) == "false" for c in r.conditions.values())


def test_muddy_three_first_round_conditions():
    r = synthesize(parse(muddy_spr(3)), "spr")
    by_text = {}
    for c in r.condition_at("Child0", 0):
        by_text[format_expr(c.var.formula)] = format_expr(c.source)
    # at time 0 a child knows only when it sees two clean foreheads
    assert by_text["Knows Self muddy[Self] \\/ Knows Self neg muddy[Self]"] == "neg info1 /\\ neg info2"
    assert r.slice_sizes == [7, 7, 7]


@pytest.mark.parametrize("name", sorted(corpus()))
@pytest.mark.parametrize("view", ["clk", "spr"])
def test_conditions_agree_with_knowledge_on_realized_observations(name, view):
    r = synthesize(corpus()[name], view)
    mgr = r.sym.mgr
    for t, S in enumerate(r.slices):
        m = EpistemicStructure(r.sym, S, t)
        for v in [v for v in r.conditions if v.time == t]:
            c = r.conditions[v]
            want = obs_sat(m, v.agent, r.cm.skel_formulas[v])
            assert mgr.and_(mgr.xor(c.bdd, want), c.care) == FALSE
            assert mgr.and_(want, c.care) == c.holds_on


@pytest.mark.parametrize("view", ["clk", "spr"])
def test_sidecar_round_trip_reproduces_theta(view):
    m = parse(bundled("guess.kbp"))
    r = synthesize(m, view)
    _, side = emit(r)
    work = history_transform(m) if view == "spr" else m
    theta = theta_from_sidecar(skeleton(work), read_sidecar(side))
    assert {v: strip_spans(e) for v, e in theta.items()} == {v: strip_spans(e) for v, e in r.theta.items()}
    assert check_implementation(m, theta, view).passed


def test_emitted_program_reparses_and_is_standard():
    r = synthesize(parse(bundled("muddy4.kbp")), "spr")
    program, _ = emit(r)
    std = parse(program)
    assert not std.is_knowledge_based
    compile_model(std)


def test_enumerated_conditions_use_compact_literals():
    r = synthesize(parse(bundled("guess.kbp")), "clk")
    texts = {format_expr(c.source) for c in r.conditions.values()}
    assert texts <= {"true", "false", "h", "neg h", "s == red", "s != red"}


def test_shared_manager_is_not_collected():
    mgr = BddManager()
    a = synthesize(parse(muddy_spr(3)), "spr", manager=mgr)
    b = synthesize(parse(muddy_spr(3)), "spr")
    assert a.slice_sizes == b.slice_sizes
    assert {v: format_expr(c.source) for v, c in a.conditions.items()} == \
           {v: format_expr(c.source) for v, c in b.conditions.items()}
    mgr.check_invariants()


def test_reverse_agent_order_gives_same_conditions():
    m = parse(muddy_spr(4))
    a = synthesize(m, "spr")
    b = synthesize(m, "spr", reverse_agents=True)
    assert a.slice_sizes == b.slice_sizes
    for v, c in a.conditions.items():
        assert set(a.sym.observations(c.holds_on, v.agent)) == set(b.sym.observations(b.conditions[v].holds_on, v.agent))
