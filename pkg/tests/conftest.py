"""Shared fixtures and the release-gate summary hook.

Tests marked ``@pytest.mark.acceptance(num, label)`` get one PASS/FAIL
line each in the terminal summary, so the gate status is readable
without scanning the full pytest output.
"""

import numpy as np
import pytest

from kitvqe.ansatz import AnsatzSpec
from kitvqe.lattice import build_preset
from kitvqe.model import preset
from kitvqe.vqe import VqeProblem

_RESULTS: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(wrapper=True)
def pytest_runtest_makereport(item, call):
    report = yield
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        num, label = mark.args
        if report.when == "call" or (report.when == "setup"
                                     and report.outcome != "passed"):
            _RESULTS[int(num)] = (str(label), report.outcome)
    return report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    words = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    for num in sorted(_RESULTS):
        label, outcome = _RESULTS[num]
        word = words.get(outcome, outcome.upper())
        terminalreporter.write_line(f"criterion {num:2d} [{word}] {label}")


# ---------------------------------------------------------------------------
# cheap shared problem builders


def build_problem(lattice_name: str, model_label: str, kind: str, layers: int,
                  shots: int | None = None, seed: int = 0) -> VqeProblem:
    lattice = build_preset(lattice_name)
    return VqeProblem(lattice, preset(model_label),
                      AnsatzSpec(kind, layers, lattice), shots=shots, seed=seed)


@pytest.fixture(scope="session")
def make_problem():
    return build_problem


@pytest.fixture(scope="session")
def rng_factory():
    def make(seed: int = 0) -> np.random.Generator:
        return np.random.default_rng(seed)
    return make
