"""Synthetic inputs: the shipped island fixture and random small planning cases."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .domain import (DAYS_PER_YEAR, HOURS_PER_DAY, BatteryUnit, DieselUnit, Line,
                     LoadDemand, Network, Node, PlanningCase, RepresentativeDay,
                     ResUnit)
from .ingest import YearSeries, write_series

ISLAND_DIR = Path(__file__).parent / "data" / "island"

PEAK_LOAD_KW = 1252.0
DIESEL_COST = 196.2 / 1000.0  # currency per kWh
CURTAIL_PENALTY = 1962.0 / 1000.0
INTEREST_RATE = 0.053


def island_series(seed: int = 2013) -> dict:
    """Hourly load (kW), irradiance (W/m^2) and 10 m wind speed (m/s) for one year."""
    rng = np.random.default_rng(seed)
    days = DAYS_PER_YEAR
    h = np.arange(HOURS_PER_DAY)
    d = np.arange(days)
    winter = 0.5 * (1 + np.cos(2 * np.pi * (d - 15) / days))  # 1 mid-January, 0 mid-July

    shape = (0.55 + 0.25 * np.exp(-0.5 * ((h - 8.5) / 2.0) ** 2)
             + 0.40 * np.exp(-0.5 * ((h - 18.5) / 2.2) ** 2))
    level = 0.75 + 0.25 * winter + 0.05 * rng.standard_normal(days)
    load = np.outer(level, shape) * (1 + 0.02 * rng.standard_normal((days, HOURS_PER_DAY)))
    load = np.clip(load, 0.05, None)
    load *= PEAK_LOAD_KW / load.max()

    daylen = 12.0 + 4.0 * np.cos(2 * np.pi * (d - 172) / days)
    peak_irr = 550.0 + 400.0 * (1 - winter)
    clear = rng.uniform(0.15, 1.0, days)
    clear[rng.choice(days, 8, replace=False)] = 1.0
    sunrise = 12.5 - daylen / 2
    phase = (h[None, :] + 0.5 - sunrise[:, None]) / daylen[:, None]
    bell = np.where((phase > 0) & (phase < 1), np.sin(np.pi * np.clip(phase, 0, 1)) ** 1.5, 0.0)
    irradiance = bell * (peak_irr * clear)[:, None]

    mean = np.empty(days)
    mean[0] = 7.0
    for i in range(1, days):
        mean[i] = 0.75 * mean[i - 1] + 0.25 * (6.5 + 1.5 * winter[i]) + 1.6 * rng.standard_normal()
    mean = np.clip(mean, 2.5, 16.0)
    calm = rng.choice(days, 6, replace=False)
    mean[calm] = rng.uniform(0.8, 1.6, calm.size)
    diurnal = 1 + 0.12 * np.sin(2 * np.pi * (h - 9) / HOURS_PER_DAY)
    wind = np.outer(mean, diurnal) * (1 + 0.08 * rng.standard_normal((days, HOURS_PER_DAY)))
    wind[calm] = np.minimum(wind[calm], 2.0)
    wind = np.clip(wind, 0.0, None)

    return {"load": load.ravel(), "irradiance": irradiance.ravel(), "wind": wind.ravel()}


NODES_CSV = """id,is_slack,vmin,vmax
PS,true,0.95,1.05
F1a,false,0.95,1.05
F1b,false,0.95,1.05
F2a,false,0.95,1.05
"""

LINES_CSV = """from,to,r,x,pmax,qmax,smax
PS,F1a,0.012,0.009,3000,3000,3000
F1a,F1b,0.018,0.012,2000,2000,2000
PS,F2a,0.015,0.010,2500,2500,2500
"""


def _assets_csv() -> str:
    cols = ["type", "id", "node", "technology", "capacity", "pmax", "qmin", "qmax",
            "marginal_cost", "capital_cost", "lifetime", "profile_key", "emax", "emin",
            "e_ini_frac", "pc_max", "pd_max", "eta_c", "eta_d", "peak", "power_factor",
            "curtail_penalty"]
    rows = []

    def row(**kw):
        rows.append(",".join(str(kw.get(c, "")) for c in cols))

    row(type="diesel", id="DG", node="PS", pmax=3600, qmin=-2000, qmax=2000,
        marginal_cost=DIESEL_COST)
    for i in range(1, 4):
        row(type="res", id=f"W{i}", node="PS", technology="wind", capacity=1800,
            qmin=-900, qmax=900, marginal_cost=0, capital_cost=1.21e6, lifetime=30,
            profile_key="wind")
    for i in range(1, 4):
        row(type="res", id=f"S{i}", node="PS", technology="solar", capacity=1800,
            qmin=-900, qmax=900, marginal_cost=0, capital_cost=0.84e6, lifetime=30,
            profile_key="irradiance")
    for i in range(1, 3):
        row(type="battery", id=f"B{i}", node="PS", capital_cost=0.98e6, lifetime=15,
            emax=7200, emin=720, e_ini_frac=0.5, pc_max=1800, pd_max=1800,
            eta_c=0.95, eta_d=0.95, qmin=-900, qmax=900)
    row(type="demand", id="D1", node="F1b", peak=0.45 * PEAK_LOAD_KW, power_factor=0.95,
        curtail_penalty=CURTAIL_PENALTY, profile_key="load")
    row(type="demand", id="D2", node="F1a", peak=0.25 * PEAK_LOAD_KW, power_factor=0.95,
        curtail_penalty=CURTAIL_PENALTY, profile_key="load")
    row(type="demand", id="D3", node="F2a", peak=0.30 * PEAK_LOAD_KW, power_factor=0.9,
        curtail_penalty=CURTAIL_PENALTY, profile_key="load")
    return "\n".join([",".join(cols)] + rows) + "\n"


CASE_YAML = """# Synthetic island: 4-node radial feeder system, 1.252 MW peak load.
name: synthetic-island
network:
  nodes: nodes.csv
  lines: lines.csv
assets: assets.csv
series:
  load: {path: load.csv, kind: load}
  irradiance: {path: irradiance.csv, kind: irradiance}
  wind: {path: windspeed.csv, kind: windspeed}
case: C6
interest_rate: 0.053
res_curtail_penalty: 0.0
curtailment_mode: binary
mva_base: 1.0
wind_turbine: {cut_in: 4.0, rated_speed: 12.0, cut_out: 25.0, rated_power: 1800.0,
               hub_height: 80.0, measurement_height: 10.0}
solar_array: {efficiency: 0.10, area: 20000.0, rated_power: 1800.0}
"""


def write_island(directory=ISLAND_DIR, seed: int = 2013) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    series = island_series(seed)
    write_series(YearSeries("load_kw", np.round(series["load"], 3), "load"),
                 directory / "load.csv")
    write_series(YearSeries("irradiance_w_m2", np.round(series["irradiance"], 2), "irradiance"),
                 directory / "irradiance.csv")
    write_series(YearSeries("windspeed_m_s", np.round(series["wind"], 3), "windspeed"),
                 directory / "windspeed.csv")
    (directory / "nodes.csv").write_text(NODES_CSV, encoding="utf-8")
    (directory / "lines.csv").write_text(LINES_CSV, encoding="utf-8")
    (directory / "assets.csv").write_text(_assets_csv(), encoding="utf-8")
    (directory / "case.yaml").write_text(CASE_YAML, encoding="utf-8")
    return directory / "case.yaml"


def island_case_path() -> Path:
    return ISLAND_DIR / "case.yaml"


# ---------------------------------------------------------------- random cases

def random_case(rng: np.random.Generator, max_nodes: int = 4, max_binaries: int = 12,
                n_binaries=None, curtailment_mode: str = "continuous",
                n_scenarios: int = 1) -> PlanningCase:
    """A random valid radial case with ``n_scenarios`` days of 24 hours.

    Every asset keeps 0 inside its reactive range and every non-slack node
    accepts 1.0 p.u., so the all-curtailed dispatch is always feasible.
    """
    n_nodes = int(rng.integers(1, max_nodes + 1))
    nodes = [Node("n0", True, 0.9, 1.1)]
    lines = []
    for i in range(1, n_nodes):
        parent = f"n{int(rng.integers(0, i))}"
        nodes.append(Node(f"n{i}", False, float(rng.uniform(0.85, 0.97)),
                          float(rng.uniform(1.03, 1.1))))
        lines.append(Line(parent, f"n{i}", float(rng.uniform(0.005, 0.05)),
                          float(rng.uniform(0.005, 0.05)), float(rng.uniform(300, 1500)),
                          float(rng.uniform(300, 1500))))
    net = Network(tuple(nodes), tuple(lines))

    def node():
        return f"n{int(rng.integers(0, n_nodes))}"

    if n_binaries is None:
        n_binaries = int(rng.integers(1, max_binaries + 1))
    diesel = ()
    if rng.random() < 0.6:
        diesel = (DieselUnit("G0", "n0", float(rng.uniform(100, 800)), -300.0, 300.0,
                             float(rng.uniform(0.1, 0.4))),)
    res, bats = [], []
    for i in range(n_binaries):
        if rng.random() < 0.7:
            tech = "wind" if rng.random() < 0.5 else "solar"
            cap = float(rng.uniform(100, 900))
            res.append(ResUnit(f"R{i}", node(), tech, cap, -0.2 * cap, 0.2 * cap,
                               float(rng.uniform(5e3, 1e5)), float(rng.uniform(0, 0.05)),
                               tech))
        else:
            p = float(rng.uniform(100, 600))
            emax = p * float(rng.uniform(1, 5))
            bats.append(BatteryUnit(f"B{i}", node(), emax, 0.1 * emax,
                                    float(rng.uniform(0.1, 0.9)), p, p,
                                    float(rng.uniform(0.85, 1.0)), float(rng.uniform(0.85, 1.0)),
                                    -0.3 * p, 0.3 * p, float(rng.uniform(5e3, 8e4))))
    demands = []
    for i in range(int(rng.integers(1, 3))):
        demands.append(LoadDemand(f"D{i}", node(), float(rng.uniform(100, 700)),
                                  float(rng.uniform(0.85, 1.0)), float(rng.uniform(1.0, 3.0)),
                                  "load"))
    scenarios = []
    weights = rng.dirichlet(np.ones(n_scenarios)) * DAYS_PER_YEAR
    for o in range(n_scenarios):
        h = np.arange(HOURS_PER_DAY)
        load = np.clip(0.5 + 0.4 * np.sin(2 * np.pi * (h - 6) / 24)
                       + 0.1 * rng.standard_normal(24), 0, 1)
        solar = np.clip(np.sin(np.pi * (h - 6) / 12), 0, 1) * rng.uniform(0.2, 1.0)
        wind = np.clip(rng.uniform(0, 1) + 0.3 * rng.standard_normal(24), 0, 1)
        scenarios.append(RepresentativeDay(
            f"o{o}", float(weights[o]),
            {"load": tuple(float(v) for v in load)},
            {"solar": tuple(float(v) for v in solar), "wind": tuple(float(v) for v in wind)}))
    return PlanningCase(net, diesel, tuple(res), tuple(bats), tuple(demands),
                        tuple(scenarios), res_curtail_penalty=float(rng.choice([0.0, 0.05])),
                        curtailment_mode=curtailment_mode)


def flat_day(sid: str = "flat", weight: float = DAYS_PER_YEAR, demand=None,
             availability=None) -> RepresentativeDay:
    demand = demand or {"load": 1.0}
    availability = availability or {}
    return RepresentativeDay(
        sid, weight,
        {k: (float(v),) * HOURS_PER_DAY for k, v in demand.items()},
        {k: (float(v),) * HOURS_PER_DAY for k, v in availability.items()})


__all__ = ["island_series", "write_island", "island_case_path", "random_case", "flat_day"]
