"""Readers for hourly series, network tables, asset tables and case files.

Series files are comma-separated, UTF-8, one value per row, 8760 rows (leap
days must be trimmed beforehand), with an optional header row detected by a
non-numeric first row. Gaps are errors: nothing is interpolated.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
import yaml

from . import resources
from .domain import (DAYS_PER_YEAR, HOURS_PER_DAY, BatteryUnit, DieselUnit, Line,
                     LoadDemand, Network, Node, PlanningCase, RepresentativeDay,
                     ResUnit, validate_case)
from .errors import LengthError, ParseError, SignError, ValidationError, ZeroPeakError
from .scenarios import day_vectors, extract_triplet

HOURS_PER_YEAR = DAYS_PER_YEAR * HOURS_PER_DAY
SERIES_KINDS = ("load", "irradiance", "windspeed")

# candidate technology sets of the six study cases
CASE_TECHNOLOGIES = {
    "C1": ("wind",),
    "C2": ("battery", "wind"),
    "C3": ("solar",),
    "C4": ("battery", "solar"),
    "C5": ("battery", "solar", "wind"),
    "C6": ("diesel", "battery", "solar", "wind"),
}


@dataclass(frozen=True)
class YearSeries:
    key: str
    values: np.ndarray
    kind: str


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_series(path, kind: str, key: Optional[str] = None) -> YearSeries:
    """Read one hourly year of ``kind`` values from a single-column CSV."""
    if kind not in SERIES_KINDS:
        raise ValueError(f"unknown series kind {kind!r}")
    path = Path(path)
    values = []
    with path.open(encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row]
            if lineno == 1 and cells and cells[0] and not _is_number(cells[0]):
                continue
            if len(cells) != 1 or cells[0] == "":
                raise ParseError("expected exactly one value" if cells and cells[0]
                                 else "missing value", row=lineno, source=path)
            try:
                v = float(cells[0])
            except ValueError:
                raise ParseError(f"not a number: {cells[0]!r}", row=lineno,
                                 source=path) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite value {cells[0]!r}", row=lineno, source=path)
            if v < 0:
                raise SignError(f"{path}, line {lineno}: negative value {v}")
            values.append(v)
    if len(values) != HOURS_PER_YEAR:
        raise LengthError(f"{path}: {len(values)} hourly values, expected {HOURS_PER_YEAR}"
                          + (" (trim leap-year inputs to 365 days)"
                             if len(values) == HOURS_PER_YEAR + 24 else ""))
    arr = np.array(values, dtype=float)
    if kind == "load" and arr.max() <= 0:
        raise ZeroPeakError(f"{path}: load series is identically zero")
    return YearSeries(key or path.stem, arr, kind)


def write_series(series: YearSeries, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"{series.key}\n")
        for v in series.values:
            fh.write(repr(float(v)) + "\n")


def normalize_load(series: YearSeries) -> tuple[np.ndarray, float]:
    """Hourly load divided by its peak, and the peak (kW)."""
    values = np.asarray(series.values, dtype=float)
    peak = float(values.max()) if values.size else 0.0
    if not peak > 0:
        raise ZeroPeakError(f"series {series.key!r} has no positive load")
    return values / peak, peak


def _csv_rows(path):
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError("empty file", source=path)
        reader.fieldnames = [f.strip() for f in reader.fieldnames]
        for lineno, row in enumerate(reader, start=2):
            yield lineno, {k: (v.strip() if isinstance(v, str) else v)
                           for k, v in row.items() if k is not None}


class _Row:
    def __init__(self, data, lineno, path):
        self.data, self.lineno, self.path = data, lineno, path

    def str(self, name, default=None):
        v = self.data.get(name)
        if v in (None, ""):
            if default is not None:
                return default
            raise ParseError(f"missing field {name!r}", row=self.lineno, source=self.path)
        return v

    def float(self, name, default=None):
        v = self.data.get(name)
        if v in (None, ""):
            if default is not None:
                return float(default)
            raise ParseError(f"missing field {name!r}", row=self.lineno, source=self.path)
        try:
            return float(v)
        except ValueError:
            raise ParseError(f"field {name!r}: not a number {v!r}", row=self.lineno,
                             source=self.path) from None

    def has(self, name):
        return self.data.get(name) not in (None, "")

    def bool(self, name):
        v = self.str(name).lower()
        if v in ("1", "true", "yes", "y", "t"):
            return True
        if v in ("0", "false", "no", "n", "f"):
            return False
        raise ParseError(f"field {name!r}: not a boolean {v!r}", row=self.lineno,
                         source=self.path)


def read_network(nodes_path, lines_path) -> Network:
    """Nodes CSV ``id,is_slack,vmin,vmax`` and lines CSV ``from,to,r,x,pmax,qmax[,smax]``."""
    nodes = []
    for lineno, data in _csv_rows(nodes_path):
        r = _Row(data, lineno, nodes_path)
        nodes.append(Node(r.str("id"), r.bool("is_slack"), r.float("vmin"), r.float("vmax")))
    lines = []
    for lineno, data in _csv_rows(lines_path):
        r = _Row(data, lineno, lines_path)
        smax = r.float("smax") if r.has("smax") else None
        lines.append(Line(r.str("from"), r.str("to"), r.float("r"), r.float("x"),
                          r.float("pmax"), r.float("qmax"), smax))
    return Network(tuple(nodes), tuple(lines))


@dataclass
class Assets:
    diesel: list = field(default_factory=list)
    res: list = field(default_factory=list)
    battery: list = field(default_factory=list)
    demands: list = field(default_factory=list)


def _annual_cost(r: _Row, capacity_kw: float, interest_rate: Optional[float]) -> float:
    if r.has("annualized_cost"):
        return r.float("annualized_cost")
    if r.has("capital_cost") and r.has("lifetime"):
        if interest_rate is None:
            raise ParseError("capital_cost given but no interest_rate configured",
                             row=r.lineno, source=r.path)
        model = resources.CostModel(r.float("capital_cost"), interest_rate,
                                    int(r.float("lifetime")))
        return resources.annualize(model, capacity_kw / 1000.0)
    raise ParseError("need annualized_cost or capital_cost + lifetime",
                     row=r.lineno, source=r.path)


def read_assets(path, interest_rate: Optional[float] = None,
                peaks: Optional[Mapping[str, float]] = None) -> Assets:
    """Unit table discriminated by ``type`` in {diesel, res, battery, demand}.

    Annualized costs may be given directly or as ``capital_cost`` (currency per
    MW) plus ``lifetime``; demand ``peak`` defaults to the peak of the load
    series named by its ``profile_key``.
    """
    out = Assets()
    peaks = peaks or {}
    for lineno, data in _csv_rows(path):
        r = _Row(data, lineno, path)
        kind = r.str("type").lower()
        if kind == "diesel":
            out.diesel.append(DieselUnit(r.str("id"), r.str("node"), r.float("pmax"),
                                         r.float("qmin", 0.0), r.float("qmax", 0.0),
                                         r.float("marginal_cost")))
        elif kind in ("res", "solar", "wind"):
            tech = r.str("technology", kind if kind != "res" else None).lower()
            cap = r.float("capacity")
            out.res.append(ResUnit(r.str("id"), r.str("node"), tech, cap,
                                   r.float("qmin", 0.0), r.float("qmax", 0.0),
                                   _annual_cost(r, cap, interest_rate),
                                   r.float("marginal_cost", 0.0), r.str("profile_key")))
        elif kind == "battery":
            rating = max(r.float("pc_max"), r.float("pd_max"))
            out.battery.append(BatteryUnit(
                r.str("id"), r.str("node"), r.float("emax"), r.float("emin", 0.0),
                r.float("e_ini_frac", 0.0), r.float("pc_max"), r.float("pd_max"),
                r.float("eta_c", 1.0), r.float("eta_d", 1.0),
                r.float("qmin", 0.0), r.float("qmax", 0.0),
                _annual_cost(r, rating, interest_rate)))
        elif kind == "demand":
            key = r.str("profile_key")
            if r.has("peak"):
                peak = r.float("peak")
            elif key in peaks:
                peak = peaks[key]
            else:
                raise ParseError(f"demand without peak and no load series {key!r}",
                                 row=lineno, source=path)
            out.demands.append(LoadDemand(r.str("id"), r.str("node"), peak,
                                          r.float("power_factor", 1.0),
                                          r.float("curtail_penalty"), key))
        else:
            raise ParseError(f"unknown asset type {kind!r}", row=lineno, source=path)
    return out


@dataclass
class CaseInputs:
    """Everything needed to build planning cases before scenario reduction."""

    network: Network
    assets: Assets
    demand_profiles: dict  # key -> 8760 normalized values
    availability_profiles: dict
    technologies: tuple = ("diesel", "battery", "solar", "wind")
    res_curtail_penalty: float = 0.0
    curtailment_mode: str = "binary"
    polygon_sides: Optional[int] = None
    mva_base: float = 1.0
    year_days: float = DAYS_PER_YEAR
    feature_weights: Optional[dict] = None

    def select(self, technologies: Sequence[str]) -> "CaseInputs":
        return replace(self, technologies=tuple(technologies))

    def planning_case(self, scenarios: Sequence[RepresentativeDay]) -> PlanningCase:
        tech = set(self.technologies)
        return PlanningCase(
            network=self.network,
            diesel=tuple(self.assets.diesel) if "diesel" in tech else (),
            res_candidates=tuple(g for g in self.assets.res if g.technology in tech),
            battery_candidates=tuple(self.assets.battery) if "battery" in tech else (),
            demands=tuple(self.assets.demands),
            scenarios=tuple(scenarios),
            res_curtail_penalty=self.res_curtail_penalty,
            curtailment_mode=self.curtailment_mode,
            polygon_sides=self.polygon_sides,
            mva_base=self.mva_base,
            year_days=self.year_days)

    def day_vectors(self):
        return day_vectors(self.demand_profiles, self.availability_profiles)

    def scenario_sets(self, k: int, seed: int = 0) -> dict:
        dv = self.day_vectors()
        weights = None
        if self.feature_weights:
            weights = np.array([float(self.feature_weights.get(key, 1.0)) for key in dv.keys])
        best, nominal, worst = extract_triplet(dv, k, seed=seed, feature_weights=weights,
                                               year_days=self.year_days)
        return {"best": best, "nominal": nominal, "worst": worst}


def _resource_models(config: Mapping):
    wt = dict(config.get("wind_turbine") or {})
    sa = dict(config.get("solar_array") or {})
    return resources.WindTurbineCurve(**wt), resources.SolarArrayModel(**sa)


def technologies_from_config(config: Mapping) -> tuple:
    if config.get("case"):
        name = str(config["case"]).upper()
        if name not in CASE_TECHNOLOGIES:
            raise ValueError(f"unknown case {config['case']!r}; expected one of "
                             f"{', '.join(CASE_TECHNOLOGIES)}")
        return CASE_TECHNOLOGIES[name]
    techs = config.get("technologies") or CASE_TECHNOLOGIES["C6"]
    return tuple(str(t).lower() for t in techs)


def load_inputs(network_files, assets_file, series_files: Mapping, config: Mapping,
                base_dir=None) -> CaseInputs:
    """Read and normalize every input file referenced by a case."""
    base = Path(base_dir) if base_dir is not None else Path(".")

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    curve, array = _resource_models(config)
    demand, avail, peaks = {}, {}, {}
    for key, spec in series_files.items():
        if isinstance(spec, Mapping):
            path, kind = spec["path"], spec["kind"]
        else:
            path, kind = spec
        series = read_series(resolve(path), kind, key=key)
        if kind == "load":
            demand[key], peaks[key] = normalize_load(series)
        elif kind == "windspeed":
            avail[key] = resources.wind_availability(series.values, curve)
        else:
            avail[key] = resources.solar_availability(series.values, array)

    if isinstance(network_files, Mapping):
        nodes_path, lines_path = network_files["nodes"], network_files["lines"]
    else:
        nodes_path, lines_path = network_files
    network = read_network(resolve(nodes_path), resolve(lines_path))
    assets = read_assets(resolve(assets_file), config.get("interest_rate"), peaks)
    polygon = config.get("polygon_sides")
    return CaseInputs(
        network=network, assets=assets, demand_profiles=demand,
        availability_profiles=avail,
        technologies=technologies_from_config(config),
        res_curtail_penalty=float(config.get("res_curtail_penalty", 0.0)),
        curtailment_mode=str(config.get("curtailment_mode", "binary")),
        polygon_sides=int(polygon) if polygon else None,
        mva_base=float(config.get("mva_base", 1.0)),
        year_days=float(config.get("year_days", DAYS_PER_YEAR)),
        feature_weights=config.get("feature_weights"))


def assemble_case(network_files, assets_file, series_files: Mapping,
                  case_config: Mapping, base_dir=None) -> PlanningCase:
    """Read inputs, build representative days and return a validated case.

    ``case_config`` picks candidate technologies (``case: C1..C6`` or an
    explicit ``technologies`` list) and the scenario set (``k_days``,
    ``posture`` in best/nominal/worst, ``seed``).
    """
    inputs = load_inputs(network_files, assets_file, series_files, case_config, base_dir)
    k = int(case_config.get("k_days", 1))
    posture = str(case_config.get("posture", "nominal"))
    sets = inputs.scenario_sets(k, seed=int(case_config.get("seed", 0)))
    if posture not in sets:
        raise ValueError(f"posture must be best, nominal or worst, got {posture!r}")
    case = inputs.planning_case(sets[posture])
    problems = validate_case(case)
    if problems:
        raise ValidationError(problems, source=str(assets_file))
    return case


@dataclass
class CaseFile:
    path: Path
    config: dict
    inputs: CaseInputs


def load_case_file(path) -> CaseFile:
    """Load a YAML case description (paths inside are relative to the file)."""
    path = Path(path)
    try:
        config = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML: {exc}", source=path) from exc
    for key in ("network", "assets", "series"):
        if key not in config:
            raise ParseError(f"missing top-level key {key!r}", source=path)
    inputs = load_inputs(config["network"], config["assets"], config["series"], config,
                         base_dir=path.parent)
    return CaseFile(path, config, inputs)
