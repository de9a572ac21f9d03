import pytest

from qddhand import cli, config as C, scenarios

from conftest import run_cli


@pytest.mark.parametrize("name", scenarios.names())
def test_nominal_run_passes(scenario_runs, name):
    run = scenario_runs[name]
    failing = [m["name"] for m in run.summary["metrics"] if not m["passed"]]
    assert run.code == cli.EXIT_OK, failing
    assert run.summary["passed"]
    assert run.summary["ticks"]["inner"] == 5 * run.summary["ticks"]["outer"]


@pytest.mark.parametrize("name", scenarios.names())
def test_failing_override_flips_the_verdict(tmp_path, name):
    overrides = scenarios.FAILING_OVERRIDES[name]
    assert overrides
    extra = [a for o in overrides for a in ("--override", o)]
    run = run_cli(name, tmp_path, *extra)
    assert run.code == cli.EXIT_FAILED
    assert run.summary["passed"] is False
    assert any(not m["passed"] for m in run.summary["metrics"])


def test_unknown_scenario_suggestion():
    with pytest.raises(scenarios.UnknownScenario, match="did you mean 'inhand_roll'"):
        scenarios.get("inhand_rol")


@pytest.mark.parametrize("name", scenarios.names())
def test_declared_metrics_are_reported(scenario_runs, name):
    spec = scenarios.get(name)
    reported = [m["name"] for m in scenario_runs[name].summary["metrics"]]
    for metric in spec.metrics:
        assert metric in reported


def test_seed_changes_noise_but_not_verdict(tmp_path):
    run = run_cli("disturbance_grasp", tmp_path, "--seed", "3")
    assert run.code == cli.EXIT_OK


def test_scenario_defaults_load_cleanly():
    for spec in scenarios.SCENARIOS.values():
        cfg = C.load_config(spec.defaults)
        assert cfg["schema_version"] == C.SCHEMA_VERSION
