"""Shared fixtures.

Every state-vector integration run anywhere in the suite goes through a
wrapper that checks the ℓ2 norm of all returned states and records the worst
deviation seen, so norm conservation is verified across the whole suite.
"""

from __future__ import annotations

import numpy as np
import pytest

import rydnoise
import rydnoise.evolution as evolution
import rydnoise.simulator as simulator

NORM_TOL = 1e-9

NORM_LOG = {"calls": 0, "states": 0, "worst": 0.0}

_original = evolution.evolve_batch


def _checked_evolve_batch(*args, **kwargs):
    final, samples = _original(*args, **kwargs)
    devs = [np.abs(np.linalg.norm(final, axis=-1) - 1.0)]
    if samples is not None and samples.size:
        devs.append(np.abs(np.linalg.norm(samples, axis=-1) - 1.0).ravel())
    worst = float(max(d.max() for d in devs if d.size)) if final.size else 0.0
    NORM_LOG["calls"] += 1
    NORM_LOG["states"] += sum(d.size for d in devs)
    NORM_LOG["worst"] = max(NORM_LOG["worst"], worst)
    assert worst <= NORM_TOL, f"integration lost normalisation: |‖ψ‖ - 1| = {worst:.3e}"
    return final, samples


evolution.evolve_batch = _checked_evolve_batch
simulator.evolve_batch = _checked_evolve_batch
rydnoise.evolve_batch = _checked_evolve_batch


@pytest.fixture
def norm_log():
    return NORM_LOG


# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])


def pytest_collection_modifyitems(items):
    # acceptance runs last so its norm-conservation check sees every integration
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")
