from __future__ import annotations

import io
import json

import pytest

from pmcheck.automaton import Outcome, Target, enumerate_traces, load_model, run
from pmcheck.cli import positive_events, repair_loop, run_command
from pmcheck.config import ConfigError, WorkbenchConfig, parse_config
from pmcheck.discovery import LabeledSample
from pmcheck.sim import Kind, Outcome as SimOutcome, SimulationRun

NR, CI, CO, BP, ES = "Newreservation", "CheckIn", "CheckOut", "Billpayment", "Extraserviceadded"


@pytest.fixture
def m_star_path(fixtures_dir):
    return str(fixtures_dir / "m_star.dot")


def call(argv, capsys):
    code = run_command([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestConfig:
    def test_defaults(self):
        cfg = WorkbenchConfig()
        assert cfg.mapping.case == "TASKID" and cfg.abbreviations["Check In"] == "CheckIn"
        assert (cfg.k, cfg.seed, cfg.max_steps, cfg.max_depth) == (2, 0, 10_000, 10_000)

    def test_parse(self):
        cfg = parse_config("""
[mapping]
case_column = CASE
timestamp_format = %Y-%m-%d
abbreviations = short   ; compact names
[abbreviations]
Late check out = LateCheckOut
[counters]
CheckIn = check_in
[defaults]
k = 3
max_depth = 100
""")
        assert cfg.mapping.case == "CASE" and cfg.timestamp_format == "%Y-%m-%d"
        assert cfg.abbreviations["Check In"] == "ChIn"
        assert cfg.abbreviations["Late check out"] == "LateCheckOut"
        assert cfg.counter_names["CheckIn"] == "check_in"
        assert (cfg.k, cfg.max_depth) == (3, 100)
        assert cfg.override(k=5, seed=None).k == 5

    @pytest.mark.parametrize("text", [
        "[colours]\nx = 1\n", "[mapping]\nfoo = 1\n", "[defaults]\nk = two\n",
        "[mapping]\nabbreviations = tiny\n", "no section\n",
    ])
    def test_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)


class TestRepairLoop:
    def test_three_bill_payments(self, m_star):
        sample = LabeledSample(tuple(enumerate_traces(m_star, 7, Target.END)))
        base = repair_loop(m_star, sample, [], 2)[0]
        trace = (NR, CI, BP, BP, BP, CO)
        assert run(base, trace).kind is not Outcome.END
        new, report = repair_loop(base, sample, [(trace, Kind.POSITIVE)], 2)
        assert run(new, trace).kind is Outcome.END
        assert all(run(new, t).kind is Outcome.END for t in sample.positives)
        assert trace in report.added and report.injected_positives == 1

    def test_false_positive_relabelled(self, m_star):
        sample = LabeledSample(((NR, CI, CO), (NR, CI, BP, CO), (NR, CI, BP, BP, CO)))
        model, _ = repair_loop(m_star, sample, [], 1)
        assert run(model, (NR, CI, BP, BP, BP, CO)).kind is Outcome.END
        new, report = repair_loop(model, sample, [((NR, CI, BP, BP, BP, CO), Kind.NEGATIVE)], 3)
        assert run(new, (NR, CI, BP, BP, BP, CO)).kind is not Outcome.END
        assert (NR, CI, BP, BP, BP, CO) in report.removed

    def test_no_injection_is_identity(self, m_star):
        sample = LabeledSample(((NR, CI, CO), (NR, CI, BP, CO)))
        a, _ = repair_loop(m_star, sample, [], 2)
        b, report = repair_loop(a, sample, [], 2)
        assert a == b and report.added == () and report.removed == ()

    def test_positive_events_truncated(self):
        r = SimulationRun(("a", "b", "c"), ((2, "END"),), SimOutcome.STOPPED, 5)
        assert positive_events(r) == ("a", "b")


class TestCommands:
    def test_summarize(self, fixtures_dir, capsys):
        code, out, _ = call(["summarize", "--log", fixtures_dir / "sample_log.csv", "--json"], capsys)
        assert code == 0
        data = json.loads(out)
        assert data["event_count"] == 10 and set(data["distinct_resources"]) == {"fab", "lov", "top"}

    def test_traces(self, fixtures_dir, capsys):
        code, out, _ = call(["traces", "--log", fixtures_dir / "variant_log.csv", "--short"], capsys)
        assert code == 0 and out.splitlines()[1] == "Newres ChIn Bill Bill ChOut"

    def test_discover_writes_dot(self, fixtures_dir, tmp_path, capsys):
        out = tmp_path / "model.dot"
        code, _, _ = call(["discover", "--log", fixtures_dir / "variant_log.csv", "--k", 2,
                           "--out", out], capsys)
        assert code == 0
        m = load_model(out)
        assert run(m, (NR, CI, BP, CO)).kind is Outcome.END
        assert not list(tmp_path.glob(".*tmp"))

    def test_discover_reproducible(self, fixtures_dir, tmp_path, capsys):
        paths = [tmp_path / "a.dot", tmp_path / "b.dot"]
        for p in paths:
            call(["discover", "--log", fixtures_dir / "variant_log.csv", "--k", 1, "--out", p], capsys)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_discover_sample(self, tmp_path, capsys):
        sample = tmp_path / "s.txt"
        sample.write_text("a b\na b a b\n")
        code, out, _ = call(["discover", "--sample", sample, "--k", 1, "--json"], capsys)
        assert code == 0 and len(json.loads(out)["states"]) == 3

    def test_transform(self, m_star_path, tmp_path, capsys):
        pml = tmp_path / "m.pml"
        code, _, _ = call(["transform", "--dot", m_star_path, "--pml", pml, "--instrument",
                           "--ltl", "<> (end_state == 1 && extra_service == 2)"], capsys)
        assert code == 0 and "never {" in pml.read_text()

    def test_simulate(self, m_star_path, tmp_path, capsys):
        out = tmp_path / "t.txt"
        code, _, err = call(["simulate", "--model", m_star_path, "--runs", 20, "--seed", 7,
                             "--out", out, "--stats"], capsys)
        assert code == 0 and len(out.read_text().splitlines()) == 20
        assert "Ratio positive/negative" in err

    def test_interactive(self, m_star_path, monkeypatch, capsys):
        # options at q0 are listed alphabetically: 5 = Newreservation
        monkeypatch.setattr("sys.stdin", io.StringIO("5\n2\n9\n1\n3\n1\n"))
        code, out, _ = call(["simulate", "--model", m_star_path, "--interactive"], capsys)
        assert code == 0
        assert "1: Billpayment" in out and "enter a number from 1 to 5" in out
        assert "Newreservation CheckIn Billpayment CheckOut END" in out

    def test_examples(self, m_star_path, capsys):
        code, out, err = call(["examples", "--model", m_star_path, "--kind", "positive",
                               "--count", 3], capsys)
        assert code == 0 and len(out.splitlines()) == 3
        assert all(line.endswith("END") for line in out.splitlines())
        assert "unique" in err

    def test_verify_counterexample(self, m_star_path, tmp_path, capsys):
        trail = tmp_path / "r.trail"
        code, out, _ = call(["verify", "--model", m_star_path, "--ltl", "<> (end_state == 1)",
                             "--trail", trail], capsys)
        assert code == 1 and "CounterexampleFound" in out
        code, out, _ = call(["verify", "--model", m_star_path, "--replay", trail], capsys)
        assert code == 0 and "end_state=1" in out

    def test_verify_default_trail(self, fixtures_dir, tmp_path, capsys):
        model = tmp_path / "m.dot"
        model.write_bytes((fixtures_dir / "m_star.dot").read_bytes())
        code, _, _ = call(["verify", "--model", model], capsys)
        assert code == 1 and (tmp_path / "m.dot.trail").exists()

    def test_verify_none(self, m_star_path, capsys):
        code, out, _ = call(["verify", "--model", m_star_path, "--ltl",
                             "<> (end_state == 1 && sink_state == 0 && bill_payment == 3)"], capsys)
        assert code == 0 and "No counterexample found!" in out

    def test_verify_assert_and_deadlock(self, m_star_path, tmp_path, capsys):
        code, out, _ = call(["verify", "--model", m_star_path, "--assert", "end_state == 0",
                             "--trail", tmp_path / "a.trail"], capsys)
        assert code == 1 and "AssertViolated: Newreservation CheckIn CheckOut" in out
        code, _, _ = call(["verify", "--model", m_star_path, "--deadlock"], capsys)
        assert code == 0

    def test_verify_define(self, m_star_path, tmp_path, capsys):
        code, _, _ = call(["verify", "--model", m_star_path, "--define", "p=end_state == 1",
                           "--ltl", "<> p", "--trail", tmp_path / "x.trail"], capsys)
        assert code == 1

    def test_stats(self, m_star_path, tmp_path, capsys):
        traces = tmp_path / "t.txt"
        traces.write_text("a b END\nc SINK d SINK\n\nwarning: skipped\n")
        code, out, _ = call(["stats", "--traces", traces, "--external", "--json"], capsys)
        data = json.loads(out)
        assert code == 0 and data["generated"] == 2 and data["ratio_percent"] == 100.0
        code, out, _ = call(["stats", "--model", m_star_path, "--runs", 50], capsys)
        assert code == 0 and "Generated traces" in out

    def test_repair_loop(self, m_star_path, tmp_path, capsys):
        sample = tmp_path / "s.txt"
        sample.write_text(f"{NR} {CI} {CO}\n{NR} {CI} {BP} {CO}\n")
        inject = tmp_path / "i.txt"
        inject.write_text(f"{NR} {CI} {BP} {BP} {BP} {CO}\n")
        out, report = tmp_path / "new.dot", tmp_path / "diff.txt"
        code, _, _ = call(["repair-loop", "--model", m_star_path, "--sample", sample,
                           "--inject", inject, "--k", 2, "--out", out, "--report", report,
                           "--sample-out", tmp_path / "s2.txt"], capsys)
        assert code == 0
        assert run(load_model(out), (NR, CI, BP, BP, BP, CO)).kind is Outcome.END
        assert "injected 1 positive" in report.read_text()
        assert len((tmp_path / "s2.txt").read_text().splitlines()) == 3

    @pytest.mark.parametrize("argv", [
        [], ["nonsense"], ["verify"], ["verify", "--model", "missing.dot"],
        ["verify", "--model", "{m}", "--ltl", "<>"],
        ["verify", "--model", "{m}", "--ltl", "<> (foo == 1)"],
        ["discover", "--k", "1"],
        ["summarize", "--log", "{m}"],
    ])
    def test_usage_errors(self, argv, m_star_path, capsys):
        code, _, err = call([a.replace("{m}", m_star_path) for a in argv], capsys)
        assert code == 2 and err

    def test_config_flag(self, fixtures_dir, tmp_path, capsys):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[mapping]\nabbreviations = short\n")
        code, out, _ = call(["--config", cfg, "traces", "--log", fixtures_dir / "variant_log.csv"], capsys)
        assert code == 0 and out.startswith("Newres ChIn Extra")
