"""Shared fixtures: gas models, standard end states and cached backgrounds."""
from __future__ import annotations

import math

import pytest

from inflowns.boundary_layer import solve_profile
from inflowns.gas import EndState, GasModel
from inflowns.rarefaction import RarefactionEvaluator


@pytest.fixture(scope="session")
def gas1():
    return GasModel(1.0, 1.0)


@pytest.fixture(scope="session")
def gas2():
    return GasModel(2.0, 1.0)


@pytest.fixture(scope="session")
def bl_plus_states():
    return EndState(1.0, 0.5), EndState(1.5, 0.75)


@pytest.fixture(scope="session")
def bl_plus_profile(gas1, bl_plus_states):
    return solve_profile(*bl_plus_states, gas1)


@pytest.fixture(scope="session")
def bl_minus_profile(gas1):
    return solve_profile(EndState(1.0, 0.5), EndState(0.8, 0.4), gas1)


@pytest.fixture(scope="session")
def rarefaction_states():
    """Supersonic inflow (1, 3) with gamma = 2 and far state v_+ = 2 on R1."""
    return EndState(1.0, 3.0), EndState(2.0, 1.0 + 2.0 * math.sqrt(2.0))


@pytest.fixture(scope="session")
def rarefaction_ev(gas2, rarefaction_states):
    return RarefactionEvaluator.build(*rarefaction_states, gas2, q=10, eps=0.1)


# -- acceptance reporting ---------------------------------------------------------
# Tests marked ``criterion(n)`` are grouped; a criterion passes when all of its
# tests pass.  One line per criterion is printed in the terminal summary.

_CRITERIA: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    entry = _CRITERIA.setdefault(mark.args[0], {"ok": True, "details": []})
    entry["ok"] = entry["ok"] and rep.passed
    detail = dict(item.user_properties).get("detail")
    if detail:
        entry["details"].append(detail)
    elif rep.failed:
        entry["details"].append(f"{item.name} failed")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        entry = _CRITERIA[n]
        status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {'; '.join(entry['details'])}")
