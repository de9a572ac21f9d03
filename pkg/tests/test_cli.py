import json
from pathlib import Path

import pytest

from qddhand import cli, scenarios

from conftest import run_cli

GOLDEN = Path(__file__).parent / "golden" / "telemetry_headers.json"
NAMES = [
    "force_displacement",
    "disturbance_grasp",
    "form_closure",
    "smack_snatch",
    "inhand_roll",
    "regrasp_push",
    "coin_pick",
    "calibration",
]


def test_list_scenarios_stable_order(capsys):
    assert cli.main(["list-scenarios"]) == cli.EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert [line.split()[0] for line in lines] == NAMES


def test_list_scenarios_json(capsys):
    assert cli.main(["list-scenarios", "--json"]) == cli.EXIT_OK
    entries = json.loads(capsys.readouterr().out)
    assert [e["name"] for e in entries] == NAMES
    assert all(e["metrics"] and e["description"] for e in entries)


def test_unknown_scenario_suggests(tmp_path, capsys):
    assert cli.main(["run", "coin_pik", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert "coin_pick" in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error(capsys):
    assert cli.main(["frobnicate"]) == cli.EXIT_CONFIG


def test_bad_override_key(tmp_path, capsys):
    code = cli.main(["run", "calibration", "--out", str(tmp_path), "--override", "motor.Rr=1"])
    assert code == cli.EXIT_CONFIG
    assert "did you mean 'R'" in capsys.readouterr().err


def test_malformed_override(tmp_path):
    assert cli.main(["run", "calibration", "--out", str(tmp_path), "--override", "motor.R"]) == cli.EXIT_CONFIG


def test_missing_config_file(tmp_path):
    code = cli.main(["run", "calibration", "--out", str(tmp_path), "--config", str(tmp_path / "nope.json")])
    assert code == cli.EXIT_CONFIG


def test_divergence_exit_code(tmp_path, capsys):
    code = cli.main(["run", "calibration", "--out", str(tmp_path), "--override", "world.contact_stiffness=1e12"])
    assert code == cli.EXIT_DIVERGED
    assert "diverged" in capsys.readouterr().err


def test_failed_verdict_exit_code(tmp_path):
    run = run_cli("calibration", tmp_path, "--override", "calibration.target_force=5.0")
    assert run.code == cli.EXIT_FAILED
    assert run.summary["passed"] is False


def test_passing_run_writes_artifacts(scenario_runs):
    run = scenario_runs["calibration"]
    assert run.code == cli.EXIT_OK
    for name in ("summary.json", "config.json", "telemetry.csv", "telemetry_contacts.csv"):
        assert (run.out / name).is_file()
    s = run.summary
    assert s["scenario"] == "calibration" and s["passed"] is True and s["seed"] == 42
    assert set(s["ticks"]) == {"outer", "inner", "physics"}
    for m in s["metrics"]:
        assert set(m) >= {"name", "value", "passed", "criterion"}


def test_config_json_is_the_resolved_config(scenario_runs):
    cfg = json.loads((scenario_runs["calibration"].out / "config.json").read_text())
    assert cfg["schema_version"] == 1
    assert cfg["calibration"]["target_force"] == 8.2


def test_telemetry_headers_match_golden(scenario_runs):
    golden = json.loads(GOLDEN.read_text())
    seen = {}
    for name, run in scenario_runs.items():
        for p in sorted(run.out.glob("telemetry*.csv")):
            with p.open() as fh:
                seen[f"{name}/{p.name}"] = fh.readline().rstrip("\n")
    assert seen == golden


def test_table_height_override_shifts_trigger_log(tmp_path, scenario_runs):
    base = scenario_runs["smack_snatch"].summary["info"]["trigger_log"]
    run = run_cli("smack_snatch", tmp_path, "--override", "table.height=0.02")
    cfg = json.loads((run.out / "config.json").read_text())
    assert cfg["table"]["height"] == 0.02
    shifted = run.summary["info"]["trigger_log"]
    assert len(shifted) == len(base)
    for a, b in zip(base, shifted):
        assert b["height"] == pytest.approx(a["height"] + 0.02, abs=1e-12)


def test_calibrate_force_writes_report(tmp_path, capsys):
    assert cli.main(["calibrate-force", "--out", str(tmp_path)]) == cli.EXIT_OK
    out = tmp_path / "calibrate_force"
    text = (out / "report.txt").read_text()
    assert text == capsys.readouterr().out
    rep = json.loads((out / "report.json").read_text())
    assert rep["i_max_A"] == pytest.approx(3.3265, abs=1e-4)


def test_calibrate_force_infeasible(tmp_path, capsys):
    code = cli.main(["calibrate-force", "--out", str(tmp_path), "--override", "motor.R=10"])
    assert code == cli.EXIT_INFEASIBLE
    assert "voltage" in capsys.readouterr().err


def test_out_env_var_is_honoured(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["calibrate-force"]) == cli.EXIT_OK
    assert (tmp_path / "envout" / "calibrate_force" / "report.txt").is_file()


def test_plots_are_written_and_deterministic(tmp_path):
    a = run_cli("force_displacement", tmp_path / "a", "--plots")
    b = run_cli("force_displacement", tmp_path / "b", "--plots")
    svgs = sorted(p.name for p in a.out.glob("*.svg"))
    assert svgs == ["force_displacement.svg", "telemetry.svg"]
    for name in svgs:
        assert (a.out / name).read_bytes() == (b.out / name).read_bytes()


def test_seed_flag_recorded(tmp_path):
    run = run_cli("calibration", tmp_path, "--seed", "7")
    assert run.summary["seed"] == 7


def test_registry_matches_names():
    assert scenarios.names() == NAMES
