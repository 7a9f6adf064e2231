import json
import shutil

import numpy as np
import pytest
from click.testing import CliRunner

from mgplan.cli import (PlanReport, RunConfig, SolverParams, dedupe_k, emit_all, main, run,
                        stable_from, sweep)
from mgplan.errors import StageError
from mgplan.fixtures import ISLAND_DIR
from mgplan.ingest import YearSeries, write_series


def _island_copy(tmp_path, load=None, wind=None, irradiance=None):
    """The shipped island with optional constant series swapped in."""
    d = tmp_path / "island"
    shutil.copytree(ISLAND_DIR, d)
    for value, fname, kind in ((load, "load.csv", "load"), (wind, "windspeed.csv", "windspeed"),
                               (irradiance, "irradiance.csv", "irradiance")):
        if value is not None:
            write_series(YearSeries(kind, np.full(8760, float(value)), kind), d / fname)
    return d / "case.yaml"


def _strip_times(obj):
    if isinstance(obj, dict):
        return {k: _strip_times(v) for k, v in obj.items() if k != "wall_time"}
    if isinstance(obj, list):
        return [_strip_times(v) for v in obj]
    return obj


@pytest.fixture(scope="module")
def island_report(island_path):
    return run(RunConfig(island_path, k_days=1, curtailment_mode="continuous"))


def test_report_totals_reconcile(island_report):
    for r in island_report.results.values():
        assert r.status == "optimal"
        assert r.total == pytest.approx(r.inv_cost + r.opr_cost, rel=1e-9)
        # operating cost from dispatch against the solver objective's operating part
        assert abs(r.opr_cost - (r.objective - r.inv_cost)) <= 1e-6 * abs(r.objective)
        d = r.to_dict()
        assert d["total_M"] == pytest.approx(d["investment_M"] + d["operation_M"], abs=2e-6)
        if r.curtailed_mwh == 0.0:
            assert r.opr_breakdown["load_curtailment"] == 0.0


def test_report_json_round_trip(island_report):
    text = island_report.to_json()
    again = json.dumps(json.loads(text), indent=2, sort_keys=True, allow_nan=False) + "\n"
    assert again == text


def test_runs_are_deterministic(island_path, island_report):
    again = run(RunConfig(island_path, k_days=1, curtailment_mode="continuous"))
    a = _strip_times(json.loads(island_report.to_json()))
    b = _strip_times(json.loads(again.to_json()))
    assert a == b


def test_emit_files(tmp_path, island_report):
    paths = emit_all(island_report, tmp_path)
    assert sorted(p.name for p in paths) == ["costs.csv", "plotdata.csv", "report.json"]
    costs = (tmp_path / "costs.csv").read_text().splitlines()
    assert costs[0] == "posture,component,value_M"
    assert len(costs) == 1 + 3 * 6
    plot = (tmp_path / "plotdata.csv").read_text().splitlines()
    assert plot[0] == "posture,investment_M,operation_M" and len(plot) == 4


def test_constant_profiles_give_identical_postures(tmp_path):
    case = _island_copy(tmp_path, load=800.0, wind=7.0, irradiance=300.0)
    rep = run(RunConfig(case, k_days=1, curtailment_mode="continuous"))
    dicts = [_strip_times(r.to_dict()) for r in rep.results.values()]
    for d in dicts:
        d.pop("posture")
        d["scenarios"] = [s["weight"] for s in d["scenarios"]]
    assert dicts[0] == dicts[1] == dicts[2]


def test_abundant_cheap_wind_builds_one_unit(tmp_path):
    case = _island_copy(tmp_path, load=1000.0, wind=11.0, irradiance=0.0)
    rep = run(RunConfig(case, k_days=1, posture="best", candidates="C6"))
    r = rep.results["best"]
    plan = rep.plan("best")
    # the three wind units are interchangeable; exactly one of them is enough
    assert len(plan) == 1 and plan[0].startswith("W")
    assert r.opr_breakdown["generation"] == pytest.approx(0.0, abs=1e-6)


def test_wind_only_calm_worst_day_curtails_everything(tmp_path):
    case = _island_copy(tmp_path)
    rep = run(RunConfig(case, k_days=1, posture="worst", candidates="C1"))
    r = rep.results["worst"]
    assert r.status == "optimal"
    assert not any(r.built.values())
    assert r.opr_cost == pytest.approx(r.opr_breakdown["load_curtailment"], rel=1e-12)
    assert r.inv_cost == 0.0


def test_stage_errors_are_named(tmp_path, island_path):
    with pytest.raises(StageError) as info:
        run(RunConfig(tmp_path / "missing.yaml"))
    assert info.value.stage == "config"
    with pytest.raises(StageError) as info:
        run(RunConfig(island_path, k_days=400))
    assert info.value.stage == "scenarios"
    bad = _island_copy(tmp_path)
    (bad.parent / "load.csv").write_text("load\n1\n2\n")
    with pytest.raises(StageError) as info:
        run(RunConfig(bad))
    assert info.value.stage == "ingest"


def test_stable_from():
    assert stable_from([1, 2, 3, 4], ["a", "b", "c", "c"]) == 3
    assert stable_from([1, 2], ["a", "a"]) == 1
    assert stable_from([5], ["x"]) == 5
    assert stable_from([1, 2, 3], ["a", "b", "a"]) == 3


def test_dedupe_warns():
    with pytest.warns(UserWarning, match="duplicate"):
        assert dedupe_k([1, 5, 1, 10, 5]) == [1, 5, 10]


def test_singleton_sweep_equals_run(island_path, island_report):
    cfg = RunConfig(island_path, curtailment_mode="continuous")
    res = sweep(cfg, [1])
    assert len(res.reports) == 1
    a = _strip_times(json.loads(res.reports[0].to_json()))
    assert a == _strip_times(json.loads(island_report.to_json()))
    assert res.stable_from == {"best": 1, "nominal": 1, "worst": 1}


def test_cli_run(tmp_path, island_path):
    out = tmp_path / "out"
    result = CliRunner().invoke(main, ["run", "--case", str(island_path), "--k", "1",
                                       "--posture", "nominal", "--curtailment", "continuous",
                                       "--out", str(out), "--dump-mps"])
    assert result.exit_code == 0, result.output
    assert "nominal" in result.output
    for name in ("report.json", "costs.csv", "plotdata.csv", "model.mps"):
        assert (out / name).is_file()
    data = json.loads((out / "report.json").read_text())
    assert list(data["postures"]) == ["nominal"]


def test_cli_limit_exit_code(tmp_path, island_path):
    result = CliRunner().invoke(main, ["run", "--case", str(island_path), "--posture", "best",
                                       "--node-limit", "1", "--out", str(tmp_path)])
    assert result.exit_code == 2, result.output


def test_cli_error_exit_code(tmp_path):
    result = CliRunner().invoke(main, ["run", "--case", str(tmp_path / "nope.yaml"),
                                       "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "error" in result.output


def test_cli_sweep(tmp_path, island_path):
    out = tmp_path / "sweep"
    result = CliRunner().invoke(main, ["sweep", "--case", str(island_path), "--k-list", "1,2,1",
                                       "--posture", "nominal", "--curtailment", "continuous",
                                       "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "duplicate k=1" in result.output
    rows = (out / "convergence.csv").read_text().splitlines()
    assert rows[0] == "k,total_nominal_M,plan_stable_nominal"
    assert [r.split(",")[0] for r in rows[1:]] == ["1", "2"]
    assert (out / "k2" / "report.json").is_file()


def test_run_config_validation(island_path):
    for bad in (dict(k_days=0), dict(posture="median"), dict(polygon_sides=3),
                dict(candidates="C9"), dict(curtailment_mode="partial")):
        with pytest.raises(StageError):
            run(RunConfig(island_path, **bad))


def test_report_status_priority():
    rep = PlanReport("x", "x", (), 1, 0, "binary", None, {})
    assert rep.status == "optimal" and rep.exit_code() == 0
    assert SolverParams().gap_tol > 0
