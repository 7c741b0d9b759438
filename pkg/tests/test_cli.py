import json

import pytest

from interchange_lab.cli import ConfigError, ExperimentConfig, config_from_args, main, parse_process, run
from interchange_lab.report import VerificationReport, any_failed, reports_to_json, summary_table


def test_parse_process():
    assert parse_process("ip2", []) == ("IP", 2)
    assert parse_process("rw", [3]) == ("RW", 3)
    assert parse_process("q2", []) == ("Q2", 2)
    with pytest.raises(ConfigError):
        parse_process("zz", [])


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig("verify").validate()
    with pytest.raises(ConfigError):
        ExperimentConfig("verify", generator="cycle:n=5", checks=["bogus"]).validate()
    with pytest.raises(ConfigError):
        ExperimentConfig("simulate", generator="cycle:n=5", estimate="probj").validate()
    with pytest.raises(ConfigError):
        ExperimentConfig("analyze", generator="cycle:n=5", eps=[1.5]).validate()


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv("INTERCHANGE_LAB_SEED", "17")
    cfg = config_from_args(["simulate", "--generator", "cycle:n=5", "--estimate", "probj"])
    assert cfg.seed == 17
    cfg = config_from_args(["simulate", "--generator", "cycle:n=5", "--estimate", "probj", "--seed", "3"])
    assert cfg.seed == 3


def test_fraction_eps_parsing():
    cfg = config_from_args(["verify", "--generator", "cycle:n=5", "--eps", "1/4,0.1"])
    assert cfg.eps == [0.25, 0.1]


def test_gen_and_analyze(tmp_path):
    out = tmp_path / "a"
    assert main(["gen", "--generator", "cycle:n=5", "--out", str(out)]) == 0
    assert json.loads((out / "instance.json").read_text())["n"] == 5
    assert main(["analyze", "--instance", str(out / "instance.json"), "--process", "ip2", "--eps", "1/4",
                 "--export-generator", "--out", str(out)]) == 0
    summary = json.loads((out / "analysis.json").read_text())
    assert summary["states"] == 20 and summary["reversible"]
    assert (out / "tv_curve.csv").read_text().startswith("t,value,se\n")
    manifest = json.loads((out / "manifest.json").read_text())
    assert "generator.coo" in manifest["outputs"]
    assert "timestamp" not in json.dumps(manifest)


def test_verify_exit_codes(tmp_path, capsys):
    out = tmp_path / "v"
    assert main(["verify", "--generator", "complete:n=4", "--check", "mixtrel,negcorr", "--out", str(out)]) == 0
    data = json.loads((out / "reports.json").read_text())
    assert data and all(r["status"] == "pass" for r in data)
    assert main(["report", str(out / "reports.json"), "--out", str(tmp_path / "r")]) == 0
    assert "pass:" in capsys.readouterr().out


def test_report_command_flags_failures(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(reports_to_json([VerificationReport("x", 2.0, 1.0)]))
    assert main(["report", str(bad), "--out", str(tmp_path / "r")]) == 1


def test_too_large_state_space_is_a_clean_error(tmp_path, capsys):
    rc = main(["analyze", "--generator", "cycle:n=40", "--process", "ip", "--k", "6", "--out", str(tmp_path)])
    assert rc == 2
    assert "Monte Carlo" in capsys.readouterr().err


def test_run_is_deterministic(tmp_path):
    cfgs = [
        ExperimentConfig("simulate", generator="complete:n=4", estimate="tv", process="ip", k=[2],
                         times=[0.4], replicas=300, seed=9, out=str(tmp_path / tag))
        for tag in ("x", "y")
    ]
    for cfg in cfgs:
        assert run(cfg) == 0
    a, b = (json.loads((tmp_path / t / "manifest.json").read_text()) for t in ("x", "y"))
    assert a["outputs"] == b["outputs"] and a["config_sha256"] == b["config_sha256"]


def test_report_helpers():
    reps = [
        VerificationReport("ok", 1.0, 2.0),
        VerificationReport("bad", 3.0, 2.0),
        VerificationReport("loose", 3.0, 2.0, asserted=False),
        VerificationReport.condition_not_met("gated", {"delta": 2.0}),
    ]
    assert [r.status for r in reps] == ["pass", "fail", "exploratory", "condition not met"]
    assert any_failed(reps)
    assert not any_failed([reps[0], reps[2], reps[3]])
    table = summary_table(reps)
    assert "condition not met" in table
    back = json.loads(reports_to_json(reps))
    assert back[3]["lhs"] == "nan"
    assert back[2]["details"]["observed"] == "fail"
