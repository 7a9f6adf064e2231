import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mgplan.domain import (BatteryUnit, DieselUnit, Line, LoadDemand, Network, Node,  # noqa: E402
                           PlanningCase, ResUnit)
from mgplan.fixtures import flat_day, island_case_path  # noqa: E402


_CRITERIA = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    _CRITERIA.append((mark.args[0], mark.args[1], rep.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, outcome, detail in sorted(_CRITERIA):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {number:>2}: {verdict}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))


@pytest.fixture
def three_node_network():
    nodes = (Node("a", True, 0.95, 1.05), Node("b", False, 0.9, 1.1), Node("c", False, 0.9, 1.1))
    lines = (Line("a", "b", 0.01, 0.02, 500.0, 500.0), Line("b", "c", 0.02, 0.01, 400.0, 400.0))
    return Network(nodes, lines)


@pytest.fixture
def small_case(three_node_network):
    """Diesel at the slack, one wind and one battery candidate, one flat day."""
    return PlanningCase(
        network=three_node_network,
        diesel=(DieselUnit("G", "a", 600.0, -300.0, 300.0, 0.2),),
        res_candidates=(ResUnit("W", "b", "wind", 400.0, -100.0, 100.0, 2000.0, 0.0, "wind"),),
        battery_candidates=(BatteryUnit("B", "c", 800.0, 80.0, 0.5, 200.0, 200.0, 0.95, 0.95,
                                        -50.0, 50.0, 1500.0),),
        demands=(LoadDemand("D", "c", 300.0, 0.95, 2.0, "load"),),
        scenarios=(flat_day(demand={"load": 0.8}, availability={"wind": 0.5}),),
        curtailment_mode="binary")


@pytest.fixture(scope="session")
def island_path():
    return island_case_path()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
