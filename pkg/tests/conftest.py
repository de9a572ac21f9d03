import json
import time
from pathlib import Path

import pytest

from qddhand import cli, scenarios

ACCEPTANCE_LINES = []


class ScenarioRun:
    def __init__(self, name, code, out: Path, wall: float):
        self.name = name
        self.code = code
        self.out = out
        self.wall = wall
        summary = out / "summary.json"
        self.summary = json.loads(summary.read_text()) if summary.exists() else None

    def metric(self, name):
        for m in self.summary["metrics"]:
            if m["name"] == name:
                return m
        raise KeyError(name)


def run_cli(name, out: Path, *extra) -> ScenarioRun:
    t0 = time.perf_counter()
    code = cli.main(["run", name, "--out", str(out), *extra])
    return ScenarioRun(name, code, out / name, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def scenario_runs(tmp_path_factory):
    """Every registered scenario run once through the CLI with its defaults."""
    root = tmp_path_factory.mktemp("runs")
    return {name: run_cli(name, root) for name in scenarios.names()}


@pytest.fixture
def record_criterion():
    def record(number: int, title: str, passed: bool, detail: str):
        line = f"criterion {number:2d} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
