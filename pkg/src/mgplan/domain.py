"""Core data types for microgrid investment planning.

All types are frozen dataclasses. Structural invariants are not enforced in
``__post_init__``; :func:`validate_case` collects every violation instead so a
caller sees the whole list at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

HOURS_PER_DAY = 24
DAYS_PER_YEAR = 365


@dataclass(frozen=True)
class Node:
    id: str
    is_slack: bool = False
    vmin: float = 0.95
    vmax: float = 1.05


@dataclass(frozen=True)
class Line:
    from_node: str
    to_node: str
    r: float  # p.u.
    x: float  # p.u.
    pmax: float  # kW
    qmax: float  # kVAr
    smax: Optional[float] = None  # kVA

    @property
    def name(self) -> str:
        return f"{self.from_node}-{self.to_node}"


@dataclass(frozen=True)
class Network:
    nodes: tuple[Node, ...]
    lines: tuple[Line, ...]

    @property
    def slack(self) -> Node:
        return next(n for n in self.nodes if n.is_slack)

    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    def upstream_line(self, node_id: str) -> Optional[Line]:
        for line in self.lines:
            if line.to_node == node_id:
                return line
        return None

    def downstream_lines(self, node_id: str) -> list[Line]:
        return [line for line in self.lines if line.from_node == node_id]


@dataclass(frozen=True)
class DieselUnit:
    id: str
    node: str
    pmax: float  # kW
    qmin: float  # kVAr
    qmax: float  # kVAr
    marginal_cost: float  # currency/kWh


@dataclass(frozen=True)
class ResUnit:
    id: str
    node: str
    technology: str  # "solar" | "wind"
    capacity: float  # kW
    qmin: float
    qmax: float
    annualized_cost: float  # currency/yr
    marginal_cost: float
    profile_key: str


@dataclass(frozen=True)
class BatteryUnit:
    id: str
    node: str
    emax: float  # kWh
    emin: float  # kWh
    e_ini_frac: float
    pc_max: float  # kW
    pd_max: float  # kW
    eta_c: float
    eta_d: float
    qmin: float
    qmax: float
    annualized_cost: float

    @property
    def e_ini(self) -> float:
        return self.e_ini_frac * self.emax


@dataclass(frozen=True)
class LoadDemand:
    id: str
    node: str
    peak: float  # kW
    power_factor: float
    curtail_penalty: float  # currency/kWh
    profile_key: str

    @property
    def reactive_ratio(self) -> float:
        """tan(arccos(pf)): kVAr drawn per kW served."""
        return math.tan(math.acos(self.power_factor))


@dataclass(frozen=True)
class RepresentativeDay:
    id: str
    weight: float  # days represented within the year
    demand_profile: Mapping[str, tuple[float, ...]] = field(default_factory=dict)
    availability_profile: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    def demand(self, key: str) -> tuple[float, ...]:
        return self.demand_profile[key]

    def availability(self, key: str) -> tuple[float, ...]:
        return self.availability_profile[key]


@dataclass(frozen=True)
class PlanningCase:
    network: Network
    diesel: tuple[DieselUnit, ...] = ()
    res_candidates: tuple[ResUnit, ...] = ()
    battery_candidates: tuple[BatteryUnit, ...] = ()
    demands: tuple[LoadDemand, ...] = ()
    scenarios: tuple[RepresentativeDay, ...] = ()
    res_curtail_penalty: float = 0.0
    curtailment_mode: str = "binary"  # "binary" | "continuous"
    polygon_sides: Optional[int] = None
    mva_base: float = 1.0
    year_days: float = DAYS_PER_YEAR


def _network_violations(net: Network) -> list[str]:
    out = []
    ids = [n.id for n in net.nodes]
    if not ids:
        return ["network has no nodes"]
    if len(set(ids)) != len(ids):
        out.append("duplicate node ids")
    slacks = [n for n in net.nodes if n.is_slack]
    if len(slacks) == 0:
        out.append("no slack node")
    elif len(slacks) > 1:
        out.append("multiple slack nodes")
    for n in net.nodes:
        if n.vmin > n.vmax:
            out.append(f"node {n.id}: vmin > vmax")
        if n.is_slack and not (n.vmin <= 1.0 <= n.vmax):
            out.append(f"node {n.id}: slack voltage 1.0 outside [vmin, vmax]")

    known = set(ids)
    for line in net.lines:
        tag = f"line {line.name}"
        if line.from_node not in known or line.to_node not in known:
            out.append(f"{tag}: unknown endpoint")
        if line.from_node == line.to_node:
            out.append(f"{tag}: from == to")
        if line.r < 0 or line.x < 0:
            out.append(f"{tag}: negative impedance")
        if not (line.pmax > 0 and line.qmax > 0):
            out.append(f"{tag}: flow limits must be positive")
        if line.smax is not None and not line.smax > 0:
            out.append(f"{tag}: smax must be positive")

    incoming: dict[str, int] = {i: 0 for i in ids}
    for line in net.lines:
        if line.to_node in incoming:
            incoming[line.to_node] += 1
    radial = True
    for n in net.nodes:
        expected = 0 if n.is_slack else 1
        if incoming.get(n.id, 0) != expected:
            radial = False
    if len(slacks) == 1 and radial:
        # every node must be reachable from the slack along line directions
        children: dict[str, list[str]] = {i: [] for i in ids}
        for line in net.lines:
            if line.from_node in children:
                children[line.from_node].append(line.to_node)
        seen = set()
        stack = [slacks[0].id]
        while stack:
            cur = stack.pop()
            if cur in seen:
                radial = False
                break
            seen.add(cur)
            stack.extend(children[cur])
        if seen != known:
            radial = False
    if not radial:
        out.append("network not radial")
    return out


def validate_case(case: PlanningCase) -> list[str]:
    """Return every violated structural invariant of ``case`` (empty if valid)."""
    out = _network_violations(case.network)
    nodes = {n.id for n in case.network.nodes}

    def check_node(kind, unit):
        if unit.node not in nodes:
            out.append(f"{kind} {unit.id}: unknown node {unit.node!r}")

    unit_ids = [u.id for u in (*case.diesel, *case.res_candidates,
                               *case.battery_candidates, *case.demands)]
    if len(set(unit_ids)) != len(unit_ids):
        out.append("duplicate unit ids")

    for g in case.diesel:
        check_node("diesel", g)
        if g.pmax < 0:
            out.append(f"diesel {g.id}: pmax < 0")
        if g.qmin > g.qmax:
            out.append(f"diesel {g.id}: qmin > qmax")
        if g.marginal_cost < 0:
            out.append(f"diesel {g.id}: marginal_cost < 0")
    for g in case.res_candidates:
        check_node("res", g)
        if g.technology not in ("solar", "wind"):
            out.append(f"res {g.id}: unknown technology {g.technology!r}")
        if not g.capacity > 0:
            out.append(f"res {g.id}: capacity must be positive")
        if g.qmin > g.qmax:
            out.append(f"res {g.id}: qmin > qmax")
        if g.annualized_cost < 0:
            out.append(f"res {g.id}: annualized_cost < 0")
    for b in case.battery_candidates:
        check_node("battery", b)
        if not 0 <= b.emin <= b.emax:
            out.append(f"battery {b.id}: requires 0 <= emin <= emax")
        if not 0 <= b.e_ini_frac <= 1 or not b.emin <= b.e_ini <= b.emax:
            out.append(f"battery {b.id}: initial energy outside [emin, emax]")
        if b.pc_max < 0 or b.pd_max < 0:
            out.append(f"battery {b.id}: negative power rating")
        if not (0 < b.eta_c <= 1 and 0 < b.eta_d <= 1):
            out.append(f"battery {b.id}: efficiencies must lie in (0, 1]")
        if b.qmin > b.qmax:
            out.append(f"battery {b.id}: qmin > qmax")
        if b.annualized_cost < 0:
            out.append(f"battery {b.id}: annualized_cost < 0")
    for d in case.demands:
        check_node("demand", d)
        if d.peak < 0:
            out.append(f"demand {d.id}: peak < 0")
        if not 0 < d.power_factor <= 1:
            out.append(f"demand {d.id}: power_factor must lie in (0, 1]")
        if d.curtail_penalty < 0:
            out.append(f"demand {d.id}: curtail_penalty < 0")

    if case.curtailment_mode not in ("binary", "continuous"):
        out.append(f"unknown curtailment_mode {case.curtailment_mode!r}")
    if case.polygon_sides is not None and case.polygon_sides < 4:
        out.append("polygon_sides must be >= 4")
    if case.res_curtail_penalty < 0:
        out.append("res_curtail_penalty < 0")
    if not case.mva_base > 0:
        out.append("mva_base must be positive")

    out.extend(scenario_violations(case.scenarios, case.year_days,
                                   [d.profile_key for d in case.demands],
                                   [g.profile_key for g in case.res_candidates]))
    return out


def scenario_violations(scenarios: Sequence[RepresentativeDay], year_days: float,
                        demand_keys: Sequence[str] = (),
                        availability_keys: Sequence[str] = ()) -> list[str]:
    out = []
    total = 0.0
    for s in scenarios:
        if s.weight < 0:
            out.append(f"scenario {s.id}: negative weight")
        total += s.weight
        for label, profiles in (("demand", s.demand_profile),
                                ("availability", s.availability_profile)):
            for key, vals in profiles.items():
                if len(vals) != HOURS_PER_DAY:
                    out.append(f"scenario {s.id}: {label} profile {key!r} "
                               f"has {len(vals)} entries")
                elif any(not 0.0 <= v <= 1.0 for v in vals):
                    out.append(f"scenario {s.id}: {label} profile {key!r} "
                               "outside [0, 1]")
        for key in demand_keys:
            if key not in s.demand_profile:
                out.append(f"scenario {s.id}: missing demand profile {key!r}")
        for key in availability_keys:
            if key not in s.availability_profile:
                out.append(f"scenario {s.id}: missing availability profile {key!r}")
    if scenarios and abs(total - year_days) > 1e-6 * max(1.0, year_days):
        out.append(f"scenario weights sum to {total:g}, expected {year_days:g}")
    return out
