import json
import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("ci", max_examples=60, deadline=None, derandomize=True)
settings.load_profile("ci")


@pytest.fixture
def small_config():
    from inscore import GenConfig

    return GenConfig(width=64, height=64, max_instances=8, master_seed=3)


def run_cli(*args, check=True):
    import subprocess

    proc = subprocess.run([sys.executable, "-m", "inscore", *map(str, args)], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"inscore {' '.join(map(str, args))} exited {proc.returncode}:\n{proc.stderr}")
    return proc


@pytest.fixture(scope="session")
def seed42_runs(tmp_path_factory):
    """``generate --count 1000 --seed 42`` three times: workers 1, 1 and 8."""
    root = tmp_path_factory.mktemp("seed42")
    runs = {}
    for name, workers in (("first", 1), ("second", 1), ("parallel", 8)):
        out = root / name
        proc = run_cli("generate", "--count", 1000, "--seed", 42, "--out", out, "--workers", workers)
        runs[name] = out
        runs[name + "_report"] = json.loads(proc.stdout)
    return runs


ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; call ``criterion.detail(text)`` to attach measurements."""

    class Recorder:
        def __init__(self):
            self.text = ""

        def detail(self, text):
            self.text = text

    rec = Recorder()
    yield rec
    failed = getattr(request.node, "rep_call", None)
    passed = failed is not None and failed.passed
    ACCEPTANCE.append((request.node.name, passed, rec.text))


@pytest.hookimpl(hookwrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, text in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {text}")
