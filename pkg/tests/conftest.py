"""Shared fixtures and the acceptance summary printed at the end of a run."""

import subprocess
import sys

import pytest

_ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    """Record a criterion verdict; the summary hook prints one line each."""

    def record(number, passed, detail):
        _ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")


@pytest.fixture
def run_cli(tmp_path):
    """Run ``python -m bifcurve`` in a scratch directory."""

    def run(*args, cwd=None):
        return subprocess.run(
            [sys.executable, "-m", "bifcurve", *map(str, args)],
            capture_output=True,
            text=True,
            cwd=cwd or tmp_path,
        )

    return run
