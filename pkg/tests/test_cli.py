import subprocess
import sys

import pytest

from kbpsynth import cli
from kbpsynth.corpus import muddy_spr
from kbpsynth.lang import format_model, parse

ALL_KNOW = "Forall x:Agent (Knows x muddy[x] \\/ Knows x neg muddy[x])"


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def muddy3(tmp_path):
    p = tmp_path / "muddy3.kbp"
    p.write_text(muddy_spr(3))
    return p


def test_synth_spr_muddy4_reports_four_slices(capsys, tmp_path):
    out = tmp_path / "m4.kbp"
    code, _, err = run(capsys, "synth", "--view", "spr", "muddy4.kbp", "--out", str(out))
    assert code == 0
    assert "4 slices" in err
    assert err.count("states,") == 4
    assert not parse(out.read_text()).is_knowledge_based
    assert (tmp_path / "m4.conditions.tsv").read_text().startswith("agent\ttime\tformula")


def test_synth_knowledge_free_is_identity_with_warning(capsys):
    code, out, err = run(capsys, "synth", "--view", "clk", "toggle.kbp")
    assert code == 0
    assert "warning: no knowledge conditions" in err
    assert parse(out) == parse(format_model(parse(out)))
    assert "Knows" not in out


def test_synth_obs_view_is_rejected(capsys):
    code, _, err = run(capsys, "synth", "--view", "obs", "muddy4.kbp")
    assert code == 1
    assert "--view clk" in err and "--view spr" in err


def test_synth_report_writes_table_and_figure(capsys, tmp_path, muddy3):
    code, _, _ = run(capsys, "synth", str(muddy3), "--view", "spr", "--report", str(tmp_path / "rep"))
    assert code == 0
    rows = (tmp_path / "rep" / "slices.tsv").read_text().splitlines()
    assert rows[0].split("\t") == ["time", "states", "bdd_nodes", "conditions", "realized_observations"]
    assert [r.split("\t")[1] for r in rows[1:]] == ["7", "7", "7"]
    assert (tmp_path / "rep" / "slices.png").read_bytes()[:4] == b"\x89PNG"


def test_synth_with_oracle(capsys, muddy3):
    code, _, err = run(capsys, "synth", str(muddy3), "--view", "clk", "--oracle")
    assert code == 0 and "explicit oracle agrees" in err


def test_synth_output_rechecks_from_sidecar(capsys, tmp_path, muddy3):
    out = tmp_path / "std.kbp"
    assert run(capsys, "synth", str(muddy3), "--view", "spr", "--out", str(out))[0] == 0
    code, text, _ = run(capsys, "check", str(muddy3), "--view", "spr",
                        "--sidecar", str(tmp_path / "std.conditions.tsv"))
    assert code == 0
    assert text.strip().splitlines()[-1] == "PASS: 18/18 conditions"


def test_check_hand_edited_condition_fails_with_trace(capsys, tmp_path, muddy3):
    out = tmp_path / "std.kbp"
    run(capsys, "synth", str(muddy3), "--view", "spr", "--out", str(out))
    side = tmp_path / "std.conditions.tsv"
    lines = side.read_text().splitlines()
    cols = lines[1].split("\t")
    cols[3] = "neg (" + cols[3] + ")"
    lines[1] = "\t".join(cols)
    bad = tmp_path / "bad.tsv"
    bad.write_text("\n".join(lines) + "\n")
    trace = tmp_path / "cex.trace"
    code, text, _ = run(capsys, "check", str(muddy3), "--view", "spr", "--sidecar", str(bad), "--out", str(trace))
    assert code == 1
    assert "FAIL" in text
    body = trace.read_text()
    assert body.startswith("# Child0 time 0")
    # the counterexample replays against the synthesized program
    one = tmp_path / "one.trace"
    one.write_text(body.split("# ", 2)[1].split("\n", 1)[1])
    code, _, err = run(capsys, "simulate", str(out), "--replay", str(one))
    assert code == 0 and "replayed 1 states" in err


def test_check_formula(capsys, muddy3, tmp_path):
    code, out, _ = run(capsys, "check", str(muddy3), "--view", "spr", "--formula", "X^3 " + ALL_KNOW)
    assert code == 0 and out.startswith("pass\tdepth 3")
    trace = tmp_path / "cex.trace"
    code, out, _ = run(capsys, "check", str(muddy3), "--view", "spr", "--formula", ALL_KNOW,
                       "--depth", "1", "--out", str(trace))
    assert code == 1 and out.startswith("FAIL\tdepth 1")
    assert trace.read_text().startswith("t=0 ")


def test_simulate_from_selected_state(capsys, tmp_path, muddy3):
    std = tmp_path / "std.kbp"
    run(capsys, "synth", str(muddy3), "--view", "spr", "--out", str(std))
    code, out, _ = run(capsys, "simulate", str(std),
                       "--init", "muddy[Child0]=false,muddy[Child1]=true,muddy[Child2]=true")
    assert code == 0
    acts = [line.split("|")[1].split() for line in out.splitlines() if "|" in line]
    assert acts[0] == ["Child0=nil", "Child1=nil", "Child2=nil"]
    assert acts[1] == ["Child0=nil", "Child1=SayYes", "Child2=SayYes"]
    code, out, _ = run(capsys, "simulate", str(std), "--steps", "0", "--init-index", "0")
    assert code == 0 and len(out.splitlines()) == 1


def test_simulate_rejects_bad_input(capsys, muddy3, tmp_path):
    assert run(capsys, "simulate", str(muddy3))[0] == 1
    std = tmp_path / "std.kbp"
    run(capsys, "synth", str(muddy3), "--view", "clk", "--out", str(std))
    assert run(capsys, "simulate", str(std), "--init", "muddy[Child0]=maybe")[0] == 1
    assert run(capsys, "simulate", str(std), "--init-index", "99")[0] == 1
    assert run(capsys, "simulate", str(std), "--crash", "A3@0")[0] == 1


def test_simulate_election_crash_schedule(capsys, tmp_path):
    src = tmp_path / "e3.kbp"
    std = tmp_path / "e3s.kbp"
    assert run(capsys, "gen", "election", "3", "--steps", "2", "--out", str(src))[0] == 0
    assert run(capsys, "synth", str(src), "--view", "spr", "--out", str(std))[0] == 0
    code, out, _ = run(capsys, "simulate", str(std), "--crash", "A3@0")
    assert code == 0
    lines = out.splitlines()
    fields = [dict(p.split("=", 1) for p in line.split("|")[0].split()) for line in lines]
    assert fields[1]["crashed[A3]"] == "true" and fields[1]["leader"] == "2"
    # A1 got "from 3: 0" out of the dead agent's buffer and drops its presumed leader
    assert (fields[1]["from_f[A1]"], fields[1]["msg[A1]"]) == ("3", "0")
    assert fields[2]["A1.presumed"] == "2"


def test_gen_families(capsys):
    code, out, _ = run(capsys, "gen", "muddy", "2")
    assert code == 0 and out == muddy_spr(2)
    code, out, _ = run(capsys, "gen", "muddy", "3", "--clk")
    assert code == 0 and "said" in out
    assert run(capsys, "gen", "muddy", "1")[0] == 1
    assert run(capsys, "gen", "election", "3", "--steps", "0")[0] == 1


def test_oracle_compare(capsys):
    code, out, _ = run(capsys, "oracle-compare", "muddy_round.kbp", "guess.kbp", "--jobs", "2")
    assert code == 0
    assert sorted(line.split("\t")[0] for line in out.splitlines()) == ["ok"] * 4


def test_oracle_compare_bound_skips(capsys):
    code, out, _ = run(capsys, "oracle-compare", "muddy4.kbp", "--view", "clk", "--oracle-bound", "4")
    assert code == 0 and out.startswith("skip")


def test_invariant_breach_exits_two(capsys, monkeypatch, muddy3):
    monkeypatch.setattr(cli, "compare_with_oracle", lambda *a, **k: ["slice 1 differs from the explicit oracle"])
    code, _, err = run(capsys, "synth", str(muddy3), "--oracle")
    assert code == 2 and "internal error" in err


def test_validation_errors_exit_one(capsys, tmp_path):
    bad = tmp_path / "bad.kbp"
    bad.write_text(muddy_spr(2).replace("info[x] == muddy[x]", "info[x] == nosuch[x]"))
    code, _, err = run(capsys, "synth", str(bad))
    assert code == 1 and "[unknown-name]" in err
    assert run(capsys, "synth", str(tmp_path / "missing.kbp"))[0] == 1
    bad.write_text("agent A")
    assert run(capsys, "check", str(bad))[0] == 1


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "kbpsynth.cli", "gen", "muddy", "2"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout == muddy_spr(2)
