import dataclasses
import math

import numpy as np
import pytest
import scipy.sparse as sp

from mgplan.errors import InfeasibleIncumbent
from mgplan.fixtures import random_case
from mgplan.formulation import build_milp
from mgplan.model import MilpModel
from mgplan.solver.bnb import solve_milp, warm_start
from mgplan.solver.simplex import LpProblem, solve_lp
from oracles import enumerate_binaries


def test_knapsack():
    m = MilpModel()
    a = m.add_var("a", kind="binary")
    b = m.add_var("b", kind="binary")
    m.add_objective(a, -3.0)
    m.add_objective(b, -2.0)
    m.add_constraint("cap", [(a, 1.0), (b, 1.0)], "<=", 1.0)
    res = solve_milp(m)
    assert res.status == "optimal"
    assert res.objective == -3.0
    assert res.incumbent.values.tolist() == [1.0, 0.0]


def _random_milp(rng, n_bin=6, n_cont=4, m=10):
    n = n_bin + n_cont
    A = rng.normal(size=(m, n)) * (rng.random((m, n)) < 0.6)
    lo = np.zeros(n)
    hi = np.concatenate([np.ones(n_bin), rng.uniform(1, 10, n_cont)])
    x0 = np.concatenate([rng.integers(0, 2, n_bin), rng.uniform(0, 1, n_cont)])
    act = A @ x0
    # a random feasible point keeps most instances feasible but not all
    rlo = np.where(rng.random(m) < 0.5, -np.inf, act - rng.uniform(-0.3, 1.5, m))
    rhi = np.where(np.isfinite(rlo), np.inf, act + rng.uniform(-0.3, 1.5, m))
    return LpProblem(sp.csc_matrix(A), rng.normal(size=n), lo, hi, rlo, rhi,
                     integer=np.arange(n_bin), priority=np.zeros(n_bin, dtype=int))


@pytest.mark.parametrize("seed", range(40))
def test_random_instances_match_enumeration(seed):
    prob = _random_milp(np.random.default_rng(seed))
    best, _ = enumerate_binaries(prob)
    res = solve_milp(prob, gap_tol=1e-9)
    if math.isinf(best):
        assert res.status == "infeasible"
        return
    assert res.status == "optimal"
    assert res.objective == pytest.approx(best, rel=1e-6, abs=1e-7)
    relax = solve_lp(prob)
    assert res.objective >= relax.objective - 1e-9
    assert res.best_bound <= res.objective + 1e-12
    v = res.incumbent.values[prob.integer]
    assert np.all(np.abs(v - np.round(v)) <= 1e-6)


def test_deterministic(rng):
    model = build_milp(random_case(rng, n_binaries=6, curtailment_mode="binary"))
    a, b = solve_milp(model), solve_milp(model)
    assert a.explored_nodes == b.explored_nodes
    assert np.array_equal(a.incumbent.values, b.incumbent.values)


def test_warm_start_never_worse(small_case):
    m = build_milp(small_case)
    plain = solve_milp(m)
    res = warm_start(m, plain.incumbent.values)
    assert res.objective <= plain.objective + 1e-9
    assert res.history[0] == (0, pytest.approx(plain.objective))
    by_name = {v.name: float(plain.incumbent.values[j]) for j, v in enumerate(m.variables)}
    assert warm_start(m, by_name).objective == pytest.approx(plain.objective)


def test_warm_start_rejects_infeasible_incumbent(small_case):
    m = build_milp(small_case)
    x = np.zeros(m.n_vars)
    with pytest.raises(InfeasibleIncumbent):
        warm_start(m, x)
    with pytest.raises(InfeasibleIncumbent):
        warm_start(m, np.zeros(3))
    good = solve_milp(m).incumbent.values.copy()
    good[m.col("z[W]")] = 0.5
    with pytest.raises(InfeasibleIncumbent):
        warm_start(m, good)


def test_node_limit_status():
    prob = _random_milp(np.random.default_rng(3), n_bin=10, n_cont=4, m=12)
    res = solve_milp(prob, node_limit=1)
    assert res.status == "node_limit"
    assert res.explored_nodes == 1


def test_time_limit_reports_gap(rng):
    model = build_milp(random_case(rng, n_binaries=8, curtailment_mode="binary"))
    res = solve_milp(model, time_limit=0.0)
    assert res.status == "gap_limit"


def test_unbounded_relaxation():
    m = MilpModel()
    x = m.add_var("x", 0.0, math.inf)
    z = m.add_var("z", kind="binary")
    m.add_objective(x, -1.0)
    m.add_constraint("r", [(x, 1.0), (z, -1.0)], ">=", 0.0)
    assert solve_milp(m).status == "unbounded"


def test_infeasible_milp():
    m = MilpModel()
    a = m.add_var("a", kind="binary")
    b = m.add_var("b", kind="binary")
    m.add_constraint("half", [(a, 1.0), (b, 1.0)], "=", 1.5)
    res = solve_milp(m)
    assert res.status == "infeasible" and res.incumbent is None


def test_diesel_only_worst_day(small_case):
    # expensive candidates and a calm day: building nothing is optimal
    case = dataclasses.replace(
        small_case,
        res_candidates=tuple(dataclasses.replace(g, annualized_cost=5e5)
                             for g in small_case.res_candidates),
        battery_candidates=tuple(dataclasses.replace(b, annualized_cost=5e5)
                                 for b in small_case.battery_candidates),
        scenarios=tuple(dataclasses.replace(s, availability_profile={"wind": (0.05,) * 24})
                        for s in small_case.scenarios))
    m = build_milp(case)
    res = solve_milp(m)
    assert res.status == "optimal"
    assert res.incumbent.values[m.col("z[W]")] == 0.0
    assert res.incumbent.values[m.col("z[B]")] == 0.0
    assert res.objective == pytest.approx(365 * 24 * 0.2 * 240.0, rel=1e-9)


def test_gap_invariant_on_planning_cases():
    rng = np.random.default_rng(77)
    for _ in range(4):
        model = build_milp(random_case(rng, n_binaries=8))
        res = solve_milp(model, gap_tol=1e-6)
        assert res.status == "optimal"
        assert res.objective - res.best_bound <= 1e-6 * max(1.0, abs(res.objective)) + 1e-9
