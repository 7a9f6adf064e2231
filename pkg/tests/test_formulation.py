import dataclasses
import math

import numpy as np
import pytest

from mgplan.domain import (DieselUnit, Line, LoadDemand, Network, Node, PlanningCase, ResUnit,
                           validate_case)
from mgplan.errors import FormulationError
from mgplan.fixtures import flat_day, random_case
from mgplan.formulation import (T, build_milp, dispatch_costs, interchangeable_pairs,
                                investment_cost, polygon_rows, values_by_name, vname)
from mgplan.solver.bnb import solve_milp
from mgplan.solver.simplex import solve_lp


def _fix(model, name, value):
    v = model.variables[model.col(name)]
    v.lower = v.upper = float(value)


def _single_node(load_kw=250.0, mc=0.3):
    net = Network((Node("n", True, 0.95, 1.05),), ())
    return PlanningCase(net, diesel=(DieselUnit("G", "n", 500.0, -100.0, 100.0, mc),),
                        demands=(LoadDemand("D", "n", load_kw, 1.0, 5.0, "load"),),
                        scenarios=(flat_day(weight=1.0),))


def test_single_diesel_serves_demand():
    case = _single_node()
    res = solve_milp(build_milp(case))
    vals = res.incumbent.values
    m = build_milp(case)
    for t in range(T):
        assert vals[m.col(vname("y", "D", t, "flat"))] == pytest.approx(1.0)
        assert vals[m.col(vname("p", "G", t, "flat"))] == pytest.approx(250.0)
    assert res.objective == pytest.approx(24 * 250.0 * 0.3, rel=1e-12)


def test_variable_and_slack_counts(small_case):
    days = [flat_day("a", 100.0, {"load": 0.5}, {"wind": 0.2}),
            flat_day("b", 265.0, {"load": 0.9}, {"wind": 0.7})]
    m = build_milp(small_case, days)
    n_nodes = len(small_case.network.nodes)
    voltages = [v for v in m.variables if v.name.startswith("v[")]
    slack_rows = [c for c in m.constraints if c.name.startswith("slack[")]
    assert len(voltages) == n_nodes * len(days) * T
    assert len(slack_rows) == len(days) * T
    z = [v.name for v in m.variables if v.name.startswith("z[")]
    assert z == ["z[W]", "z[B]"]


def test_full_curtailment_identity(three_node_network):
    res = tuple(ResUnit(f"W{i}", "b", "wind", 500.0, -50.0, 50.0, 1e4, 0.0, "wind")
                for i in range(3))
    demands = (LoadDemand("D1", "b", 200.0, 0.95, 2.0, "load"),
               LoadDemand("D2", "c", 150.0, 0.9, 3.0, "load"))
    days = (flat_day("o1", 200.0, {"load": 0.7}, {"wind": 0.0}),
            flat_day("o2", 165.0, {"load": 0.4}, {"wind": 0.0}))
    case = PlanningCase(three_node_network, res_candidates=res, demands=demands, scenarios=days)
    m = build_milp(case)
    out = solve_milp(m)
    expected = sum(d.weight * T * dem.curtail_penalty * dem.peak * d.demand_profile["load"][0]
                   for d in days for dem in demands)
    assert out.objective == pytest.approx(expected, rel=1e-9)
    assert all(out.incumbent.values[m.col(f"z[{g.id}]")] == 0.0 for g in res)


def test_missing_profile_raises(small_case):
    with pytest.raises(FormulationError):
        build_milp(small_case, [flat_day(demand={"load": 0.5})])
    with pytest.raises(FormulationError):
        build_milp(small_case, [flat_day(demand={"other": 0.5}, availability={"wind": 0.5})])
    with pytest.raises(FormulationError):
        build_milp(small_case, [])


@pytest.mark.parametrize("col", ["p[W][5][flat]", "q[W][5][flat]", "pc[B][7][flat]",
                                 "pd[B][7][flat]", "qb[B][3][flat]"])
def test_unbuilt_units_stay_idle(small_case, col):
    m = build_milp(small_case)
    _fix(m, "z[W]", 0)
    _fix(m, "z[B]", 0)
    for sign in (1.0, -1.0):
        mm = m.copy()
        mm.objective = {mm.col(col): -sign}
        sol = solve_lp(mm)
        assert sol.status == "optimal"
        assert abs(sol.values[mm.col(col)]) <= 1e-9


def test_scenario_separability(small_case):
    days = [flat_day("a", 120.0, {"load": 0.5}, {"wind": 0.9}),
            flat_day("b", 245.0, {"load": 0.95}, {"wind": 0.1})]
    built = {"W": 1, "B": 1}
    inv = investment_cost(small_case, built)

    def solved(scen):
        m = build_milp(small_case, scen)
        for k, v in built.items():
            _fix(m, f"z[{k}]", v)
        return solve_milp(m, gap_tol=1e-12).objective

    whole = solved(days)
    parts = sum(solved([d]) - inv for d in days) + inv
    assert whole == pytest.approx(parts, rel=1e-6)


def test_energy_accounting(small_case):
    m = build_milp(small_case)
    vals = values_by_name(m, solve_milp(m).incumbent.values)
    for t in range(T):
        gen = vals[vname("p", "G", t, "flat")] + vals[vname("p", "W", t, "flat")]
        bat = vals[vname("pd", "B", t, "flat")] - vals[vname("pc", "B", t, "flat")]
        served = 300.0 * 0.8 * vals[vname("y", "D", t, "flat")]
        assert gen + bat - served == pytest.approx(0.0, abs=1e-7)


def test_costs_reconcile_with_objective(small_case):
    case = dataclasses.replace(small_case, res_curtail_penalty=0.05)
    m = build_milp(case)
    res = solve_milp(m, gap_tol=1e-12)
    vals = values_by_name(m, res.incumbent.values)
    built = {k: vals[f"z[{k}]"] for k in ("W", "B")}
    opr = dispatch_costs(case, case.scenarios, vals)
    assert investment_cost(case, built) + opr["total"] == pytest.approx(res.objective, rel=1e-9)


def test_spill_penalty_changes_cost_not_feasibility(rng):
    for _ in range(5):
        case = random_case(rng, n_binaries=3)
        a = dataclasses.replace(case, res_curtail_penalty=0.0)
        b = dataclasses.replace(case, res_curtail_penalty=0.2)
        ma, mb = build_milp(a), build_milp(b)
        assert ma.n_vars == mb.n_vars and ma.n_cons == mb.n_cons
        assert (ma.matrix() != mb.matrix()).nnz == 0
        assert solve_milp(ma).status == solve_milp(mb).status == "optimal"


def test_polygon_rows(small_case):
    net = Network(small_case.network.nodes,
                  tuple(dataclasses.replace(ln, smax=300.0) for ln in small_case.network.lines))
    case = dataclasses.replace(small_case, network=net, polygon_sides=8)
    m = build_milp(case)
    poly = [c for c in m.constraints if c.name.startswith("poly[")]
    assert len(poly) == 8 * len(net.lines) * T
    jp, jq = m.col("pl[a-b][4][flat]"), m.col("ql[a-b][4][flat]")
    for k, (cs, sn) in enumerate(polygon_rows(8)):
        row = m.constraints[m.con_index[f"poly[a-b][{k}][4][flat]"]]
        assert (row.sense, row.rhs) == ("<=", 300.0)
        assert row.terms.get(jp, 0.0) == pytest.approx(cs, abs=1e-15)
        assert row.terms.get(jq, 0.0) == pytest.approx(sn, abs=1e-15)


def test_polygon_normals_cover_the_circle():
    k = 12
    rows = np.array(polygon_rows(k))
    assert np.allclose(np.hypot(rows[:, 0], rows[:, 1]), 1.0)
    angles = np.sort(np.mod(np.arctan2(rows[:, 1], rows[:, 0]), 2 * math.pi))
    assert np.allclose(np.diff(angles), 2 * math.pi / k)


def test_voltage_drop_scaling():
    net = Network((Node("s", True, 0.9, 1.1), Node("e", False, 0.9, 1.1)),
                  (Line("s", "e", 0.05, 0.02, 2000.0, 2000.0),))
    case = PlanningCase(net, diesel=(DieselUnit("G", "s", 2000.0, -900.0, 900.0, 0.1),),
                        demands=(LoadDemand("D", "e", 1000.0, 0.8, 9.0, "load"),),
                        scenarios=(flat_day(weight=1.0),), mva_base=2.0)
    m = build_milp(case)
    vals = values_by_name(m, solve_milp(m).incumbent.values)
    drop = (0.05 * 1000.0 + 0.02 * 750.0) / 2000.0
    assert vals[vname("v", "e", 0, "flat")] == pytest.approx(1.0 - drop, abs=1e-12)


@pytest.mark.parametrize("seed", range(15))
def test_random_cases_build_cleanly(seed):
    rng = np.random.default_rng(seed)
    case = random_case(rng, n_scenarios=int(rng.integers(1, 3)),
                       curtailment_mode=str(rng.choice(["binary", "continuous"])))
    assert validate_case(case) == []
    m = build_milp(case)
    assert m.check() == []
    assert len(m.binaries()) >= len(case.res_candidates) + len(case.battery_candidates)
    for v in m.variables:
        assert v.lower <= v.upper


def test_interchangeable_candidates_are_ordered(small_case):
    twin = dataclasses.replace(small_case.res_candidates[0], id="W2")
    other = dataclasses.replace(small_case.res_candidates[0], id="W3", capacity=100.0)
    case = dataclasses.replace(small_case,
                               res_candidates=small_case.res_candidates + (twin, other))
    assert interchangeable_pairs(case) == [("W", "W2")]
    m = build_milp(case)
    row = m.constraints[m.con_index["order[W][W2]"]]
    assert row.sense == ">=" and row.terms == {m.col("z[W]"): 1.0, m.col("z[W2]"): -1.0}
