import os
import subprocess
import sys

import pytest


def run_python(code: str, backend: str = "numba", timeout: float = 600) -> str:
    """Run ``code`` in a fresh interpreter with the chosen kernel backend."""
    env = dict(os.environ, MTJSTDP_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, timeout=timeout)
    if out.returncode:
        raise AssertionError(out.stderr)
    return out.stdout


@pytest.fixture
def python_runner():
    return run_python


ACCEPTANCE = {}


def record_acceptance(number: int, ok: bool, detail: str):
    """Store one criterion verdict; printed as a block at the end of the run."""
    ACCEPTANCE[number] = (ok, detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
