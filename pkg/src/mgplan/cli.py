"""Case runner and reports: ``plan run`` and ``plan sweep``.

A run loads a case file, builds the best / nominal / worst representative-day
sets, solves one planning MILP per posture and reports investment and
operating costs. Money in reports is in millions (6 decimals), energy in
MWh per year.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import click

from .domain import validate_case
from .errors import MgplanError, StageError, ValidationError
from .formulation import build_milp, dispatch_costs, investment_cost, values_by_name
from .ingest import CASE_TECHNOLOGIES, load_case_file
from .mps import export_mps
from .solver.bnb import GAP_TOL, solve_milp
from .solver.external import ExternalSolver

log = logging.getLogger(__name__)

POSTURES = ("best", "nominal", "worst")
MONEY_DIGITS = 6
EXIT_OK, EXIT_ERROR, EXIT_LIMIT = 0, 1, 2


@dataclass
class SolverParams:
    gap_tol: float = GAP_TOL
    node_limit: int = 1_000_000
    time_limit: Optional[float] = None
    external_command: Optional[str] = None


@dataclass
class RunConfig:
    case_path: Path
    k_days: int = 1
    posture: str = "all"
    curtailment_mode: Optional[str] = None  # None keeps the case file's setting
    polygon_sides: Optional[int] = None
    candidates: Optional[str] = None  # C1..C6; None keeps the case file's set
    seed: int = 0
    solver: SolverParams = field(default_factory=SolverParams)
    out_dir: Optional[Path] = None
    dump_mps: bool = False
    workers: int = 1

    def __post_init__(self):
        self.case_path = Path(self.case_path)
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)

    def postures(self) -> tuple:
        return POSTURES if self.posture == "all" else (self.posture,)

    def validate(self) -> None:
        problems = []
        if int(self.k_days) < 1:
            problems.append(f"k_days must be >= 1, got {self.k_days}")
        if self.posture not in POSTURES + ("all",):
            problems.append(f"posture must be best, nominal, worst or all, got {self.posture!r}")
        if self.curtailment_mode not in (None, "binary", "continuous"):
            problems.append(f"unknown curtailment mode {self.curtailment_mode!r}")
        if self.candidates is not None and self.candidates.upper() not in CASE_TECHNOLOGIES:
            problems.append(f"unknown candidate set {self.candidates!r}")
        if self.polygon_sides is not None and self.polygon_sides < 4:
            problems.append("polygon_sides must be at least 4")
        if not self.case_path.is_file():
            problems.append(f"case file {self.case_path} does not exist")
        if problems:
            raise ValidationError(problems)


@dataclass
class PostureResult:
    posture: str
    built: dict  # unit id -> bool
    inv_cost: float  # currency per year
    opr_cost: float
    opr_breakdown: dict
    curtailed_mwh: float
    spilled_mwh: float
    objective: float
    status: str
    gap: float
    explored_nodes: int
    scenarios: list  # (id, weight)
    wall_time: float = 0.0

    @property
    def total(self) -> float:
        return self.inv_cost + self.opr_cost

    def to_dict(self) -> dict:
        inv = _mega(self.inv_cost)
        opr = _mega(self.opr_cost)
        return {
            "posture": self.posture,
            "built": dict(sorted(self.built.items())),
            "investment_M": inv,
            "operation_M": opr,
            "total_M": round(inv + opr, MONEY_DIGITS) if inv is not None else None,
            "operation_breakdown_M": {k: _mega(v) for k, v in sorted(self.opr_breakdown.items())},
            "curtailed_MWh": _finite(round(self.curtailed_mwh, 6)),
            "spilled_MWh": _finite(round(self.spilled_mwh, 6)),
            "objective": _finite(self.objective),
            "status": self.status,
            "gap": _finite(self.gap),
            "explored_nodes": self.explored_nodes,
            "scenarios": [{"id": sid, "weight": w} for sid, w in self.scenarios],
            "wall_time": self.wall_time,
        }


def _mega(value: float):
    return round(value / 1e6, MONEY_DIGITS) if math.isfinite(value) else None


def _finite(value: float):
    # JSON has no NaN or infinity
    return value if math.isfinite(value) else None


@dataclass
class PlanReport:
    case_name: str
    case_path: str
    technologies: tuple
    k_days: int
    seed: int
    curtailment_mode: str
    polygon_sides: Optional[int]
    results: dict  # posture -> PostureResult, in posture order
    wall_time: float = 0.0

    @property
    def status(self) -> str:
        statuses = [r.status for r in self.results.values()]
        for s in ("infeasible", "unbounded", "node_limit", "gap_limit"):
            if s in statuses:
                return s
        return "optimal"

    def exit_code(self) -> int:
        s = self.status
        if s == "optimal":
            return EXIT_OK
        if s in ("gap_limit", "node_limit"):
            return EXIT_LIMIT
        return EXIT_ERROR

    def plan(self, posture: str) -> tuple:
        """Sorted ids of the units built under ``posture``."""
        return tuple(sorted(u for u, b in self.results[posture].built.items() if b))

    def to_dict(self) -> dict:
        return {
            "case": self.case_name,
            "case_path": self.case_path,
            "technologies": list(self.technologies),
            "k_days": self.k_days,
            "seed": self.seed,
            "curtailment_mode": self.curtailment_mode,
            "polygon_sides": self.polygon_sides,
            "status": self.status,
            "postures": {p: r.to_dict() for p, r in self.results.items()},
            "wall_time": self.wall_time,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (MgplanError, ValueError, KeyError, OSError) as exc:
        raise StageError(name, exc) from exc


def _solve_posture(posture: str, inputs, scenarios, solver: SolverParams,
                   mps_path: Optional[Path]) -> PostureResult:
    t0 = time.perf_counter()
    case = inputs.planning_case(scenarios)
    problems = validate_case(case)
    if problems:
        raise StageError("formulation", ValidationError(problems))
    model = _stage("formulation", build_milp, case)
    if mps_path is not None:
        _stage("formulation", export_mps, model, mps_path)
    if solver.external_command:
        ext = ExternalSolver(solver.external_command, timeout=solver.time_limit)
        res = _stage("solver", ext.solve, model)
    else:
        res = _stage("solver", solve_milp, model, gap_tol=solver.gap_tol,
                     node_limit=solver.node_limit, time_limit=solver.time_limit)
    days = [(s.id, s.weight) for s in scenarios]
    if res.incumbent is None:
        return PostureResult(posture, {}, math.nan, math.nan, {}, math.nan, math.nan,
                             res.objective, res.status, res.gap, res.explored_nodes, days,
                             time.perf_counter() - t0)
    values = values_by_name(model, res.incumbent.values)
    built = {}
    for g in case.res_candidates + case.battery_candidates:
        built[g.id] = bool(round(values[f"z[{g.id}]"]))
    inv = investment_cost(case, {u: float(b) for u, b in built.items()})
    ops = dispatch_costs(case, scenarios, values)
    breakdown = {k: ops[k] for k in ("generation", "load_curtailment", "res_spill")}
    return PostureResult(posture, built, inv, ops["total"], breakdown,
                         ops["curtailed_kwh"] / 1000.0, ops["spilled_kwh"] / 1000.0,
                         res.objective, res.status, res.gap, res.explored_nodes, days,
                         time.perf_counter() - t0)


def run(config: RunConfig) -> PlanReport:
    """Ingest, reduce, formulate and solve every requested posture of a case."""
    t0 = time.perf_counter()
    _stage("config", config.validate)
    cf = _stage("ingest", load_case_file, config.case_path)
    inputs = cf.inputs
    overrides = {}
    if config.curtailment_mode is not None:
        overrides["curtailment_mode"] = config.curtailment_mode
    if config.polygon_sides is not None:
        overrides["polygon_sides"] = config.polygon_sides
    if config.candidates is not None:
        overrides["technologies"] = CASE_TECHNOLOGIES[config.candidates.upper()]
    if overrides:
        inputs = replace(inputs, **overrides)
    sets = _stage("scenarios", inputs.scenario_sets, int(config.k_days), seed=config.seed)

    postures = config.postures()
    mps = {}
    if config.dump_mps:
        out = config.out_dir or Path(".")
        out.mkdir(parents=True, exist_ok=True)
        for p in postures:
            mps[p] = out / ("model.mps" if len(postures) == 1 else f"model-{p}.mps")
    jobs = [(p, inputs, sets[p], config.solver, mps.get(p)) for p in postures]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            done = list(pool.map(_solve_posture, *zip(*jobs)))
    else:
        done = [_solve_posture(*job) for job in jobs]

    return PlanReport(
        case_name=str(cf.config.get("name", config.case_path.stem)),
        case_path=str(config.case_path),
        technologies=tuple(inputs.technologies),
        k_days=int(config.k_days), seed=int(config.seed),
        curtailment_mode=inputs.curtailment_mode, polygon_sides=inputs.polygon_sides,
        results={r.posture: r for r in done},
        wall_time=time.perf_counter() - t0)


# ---------------------------------------------------------------- outputs

COST_COMPONENTS = ("investment", "generation", "load_curtailment", "res_spill",
                   "operation", "total")


def cost_rows(report: PlanReport) -> list:
    rows = []
    for p, r in report.results.items():
        d = r.to_dict()
        values = {"investment": d["investment_M"], "operation": d["operation_M"],
                  "total": d["total_M"], **d["operation_breakdown_M"]}
        for comp in COST_COMPONENTS:
            rows.append((p, comp, values.get(comp)))
    return rows


def emit_report(report: PlanReport, fmt: str, out_dir) -> Path:
    """Write one output format into ``out_dir`` and return the file path."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            path = out / "report.json"
            path.write_text(report.to_json(), encoding="utf-8")
        elif fmt == "csv":
            path = out / "costs.csv"
            with path.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["posture", "component", "value_M"])
                for p, comp, v in cost_rows(report):
                    w.writerow([p, comp, _fmt(v)])
        elif fmt == "plotdata":
            path = out / "plotdata.csv"
            with path.open("w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["posture", "investment_M", "operation_M"])
                for p, r in report.results.items():
                    d = r.to_dict()
                    w.writerow([p, _fmt(d["investment_M"]), _fmt(d["operation_M"])])
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    except OSError as exc:
        raise MgplanError(f"cannot write report to {out}: {exc}") from exc
    return path


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{v:.{MONEY_DIGITS}f}"


def emit_all(report: PlanReport, out_dir) -> list:
    return [emit_report(report, fmt, out_dir) for fmt in ("json", "csv", "plotdata")]


# ---------------------------------------------------------------- sweeps

@dataclass
class SweepResult:
    k_list: list
    reports: list
    stable_from: dict  # posture -> smallest k after which the plan no longer changes

    def table(self) -> list:
        """Convergence rows: k, total per posture, and a plan-stability flag per posture."""
        postures = list(self.reports[0].results) if self.reports else []
        rows = []
        for k, rep in zip(self.k_list, self.reports):
            row = {"k": k}
            for p in postures:
                row[f"total_{p}_M"] = rep.results[p].to_dict()["total_M"]
            for p in postures:
                row[f"plan_stable_{p}"] = k >= self.stable_from[p]
            rows.append(row)
        return rows

    def write_table(self, path) -> Path:
        rows = self.table()
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if rows:
                w.writerow(list(rows[0]))
                for row in rows:
                    w.writerow([_fmt(v) if isinstance(v, float) else
                                str(v).lower() if isinstance(v, bool) else v
                                for v in row.values()])
        return path


def stable_from(k_list: Sequence[int], plans: Sequence) -> int:
    """Smallest k from which every later plan equals the last one."""
    first = k_list[-1]
    for k, plan in zip(reversed(k_list), reversed(plans)):
        if plan != plans[-1]:
            break
        first = k
    return first


def dedupe_k(k_list: Sequence[int]) -> list:
    seen, out = set(), []
    for k in k_list:
        k = int(k)
        if k in seen:
            warnings.warn(f"duplicate k={k} in sweep ignored", stacklevel=3)
            continue
        seen.add(k)
        out.append(k)
    return out


def sweep(config: RunConfig, k_list: Sequence[int]) -> SweepResult:
    """One run per distinct k (in the given order) with a shared seed."""
    if not k_list:
        raise ValueError("k_list must not be empty")
    ks = dedupe_k(k_list)
    reports = []
    for k in ks:
        sub = replace(config, k_days=k,
                      out_dir=(config.out_dir / f"k{k}") if config.out_dir else None)
        reports.append(run(sub))
    stable = {}
    for p in reports[0].results:
        stable[p] = stable_from(ks, [r.plan(p) for r in reports])
    return SweepResult(ks, reports, stable)


# ---------------------------------------------------------------- command line

def _solver_options(f):
    opts = [
        click.option("--curtailment", type=click.Choice(["binary", "continuous"]),
                     default=None, help="Override the case file's curtailment mode."),
        click.option("--polygon-sides", type=int, default=None,
                     help="Approximate line apparent-power limits with K half-planes."),
        click.option("--gap-tol", type=float, default=GAP_TOL, show_default=True),
        click.option("--node-limit", type=int, default=1_000_000, show_default=True),
        click.option("--time-limit", type=float, default=None,
                     help="Seconds per posture; the best plan found so far is reported."),
        click.option("--solver-cmd", default=None,
                     help="External MILP command with {mps} and {sol} placeholders."),
        click.option("--workers", type=int, default=1, show_default=True,
                     help="Solve postures in parallel processes."),
        click.option("--posture", type=click.Choice(list(POSTURES) + ["all"]), default="all",
                     show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--candidates", type=click.Choice(sorted(CASE_TECHNOLOGIES),
                                                       case_sensitive=False),
                     default=None, help="Candidate set C1..C6 (default: the case file's)."),
        click.option("--case", "case_path", required=True,
                     type=click.Path(dir_okay=False, path_type=Path)),
    ]
    for opt in opts:
        f = opt(f)
    return f


def _config(case_path, k, posture, seed, out, dump_mps, curtailment, polygon_sides,
            gap_tol, node_limit, time_limit, solver_cmd, workers, candidates) -> RunConfig:
    return RunConfig(case_path=case_path, k_days=k, posture=posture,
                     curtailment_mode=curtailment, polygon_sides=polygon_sides,
                     candidates=candidates, seed=seed,
                     solver=SolverParams(gap_tol, node_limit, time_limit, solver_cmd),
                     out_dir=out, dump_mps=dump_mps, workers=workers)


def _summary(report: PlanReport) -> str:
    lines = [f"{report.case_name}: k={report.k_days} status={report.status}"]
    for p, r in report.results.items():
        d = r.to_dict()
        built = ",".join(report.plan(p)) or "-"
        lines.append(f"  {p:<8} total {_fmt(d['total_M'])} M  (inv {_fmt(d['investment_M'])},"
                     f" opr {_fmt(d['operation_M'])})  built {built}  [{r.status}]")
    return "\n".join(lines)


@click.group()
@click.option("-v", "--verbose", count=True, help="More logging (repeatable).")
def main(verbose):
    """Microgrid investment planning."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command("run")
@_solver_options
@click.option("--k", "k", type=int, default=1, show_default=True,
              help="Representative days per posture.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("out"),
              show_default=True)
@click.option("--dump-mps", is_flag=True, help="Also write the MILP as MPS.")
def run_cmd(case_path, candidates, seed, posture, workers, solver_cmd, time_limit, node_limit,
            gap_tol, polygon_sides, curtailment, k, out, dump_mps):
    """Solve one case for the requested postures and write the reports."""
    cfg = _config(case_path, k, posture, seed, out, dump_mps, curtailment, polygon_sides,
                  gap_tol, node_limit, time_limit, solver_cmd, workers, candidates)
    try:
        report = run(cfg)
        emit_all(report, out)
    except MgplanError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    click.echo(_summary(report))
    sys.exit(report.exit_code())


def _parse_k_list(ctx, param, value):
    try:
        ks = [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected comma-separated integers") from None
    if not ks:
        raise click.BadParameter("at least one k is required")
    return ks


@main.command("sweep")
@_solver_options
@click.option("--k-list", required=True, callback=_parse_k_list,
              help="Comma-separated representative-day counts, e.g. 1,5,10.")
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=Path("out"),
              show_default=True)
def sweep_cmd(case_path, candidates, seed, posture, workers, solver_cmd, time_limit, node_limit,
              gap_tol, polygon_sides, curtailment, k_list, out):
    """Run the case for several k and write a convergence table."""
    cfg = _config(case_path, 1, posture, seed, out, False, curtailment, polygon_sides,
                  gap_tol, node_limit, time_limit, solver_cmd, workers, candidates)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = sweep(cfg, k_list)
        for w in caught:
            click.echo(f"warning: {w.message}", err=True)
        for k, rep in zip(result.k_list, result.reports):
            emit_all(rep, out / f"k{k}")
        table = result.write_table(Path(out) / "convergence.csv")
    except MgplanError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    for rep in result.reports:
        click.echo(_summary(rep))
    for p, k in result.stable_from.items():
        click.echo(f"plan for {p} unchanged from k={k}")
    click.echo(f"convergence table: {table}")
    codes = [rep.exit_code() for rep in result.reports]
    sys.exit(max(codes) if EXIT_ERROR not in codes else EXIT_ERROR)


if __name__ == "__main__":  # pragma: no cover
    main()
