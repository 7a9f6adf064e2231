"""Two-stage stochastic investment MILP over a linearized DistFlow network.

Column names follow ``kind[entity][t][o]`` (investment columns ``z[entity]``)
and are part of the public contract:

    z      investment decision of a RES or battery candidate (binary)
    p, q   active / reactive output of a diesel or RES unit
    pc, pd battery charge / discharge power
    qb     battery reactive power
    pl, ql active / reactive flow on line ``from-to``
    v      nodal voltage magnitude (p.u.)
    y      served fraction of a demand (1 = fully served)

Flows and injections are in kW / kVAr; line impedances are per-unit on
``case.mva_base``, so the voltage-drop row divides flows by the base in kW.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .domain import HOURS_PER_DAY, PlanningCase, RepresentativeDay
from .errors import FormulationError
from .model import INF, MilpModel

T = HOURS_PER_DAY


def vname(kind: str, entity: str, t: Optional[int] = None, o: Optional[str] = None) -> str:
    if t is None:
        return f"{kind}[{entity}]"
    return f"{kind}[{entity}][{t}][{o}]"


def polygon_rows(sides: int) -> list[tuple[float, float]]:
    """Outward normals (cos, sin) of a regular polygon circumscribing the unit circle."""
    return [(math.cos(2 * math.pi * k / sides), math.sin(2 * math.pi * k / sides))
            for k in range(sides)]


def _check_profiles(case: PlanningCase, scenarios: Sequence[RepresentativeDay]):
    for s in scenarios:
        for d in case.demands:
            if d.profile_key not in s.demand_profile:
                raise FormulationError(
                    f"scenario {s.id}: no demand profile {d.profile_key!r} for {d.id}")
            if len(s.demand_profile[d.profile_key]) != T:
                raise FormulationError(f"scenario {s.id}: profile {d.profile_key!r} "
                                       "must have 24 values")
        for g in case.res_candidates:
            if g.profile_key not in s.availability_profile:
                raise FormulationError(
                    f"scenario {s.id}: no availability profile {g.profile_key!r} for {g.id}")
            if len(s.availability_profile[g.profile_key]) != T:
                raise FormulationError(f"scenario {s.id}: profile {g.profile_key!r} "
                                       "must have 24 values")


def interchangeable_pairs(case: PlanningCase) -> list[tuple[str, str]]:
    """Consecutive candidates that differ only in their id.

    Swapping two such units maps any plan onto an equally good one, so the
    model only keeps the plan that builds the earlier-listed unit first.
    """
    pairs = []
    for units in (case.res_candidates, case.battery_candidates):
        groups: dict = {}
        for u in units:
            key = tuple(v for k, v in vars(u).items() if k != "id")
            groups.setdefault(key, []).append(u.id)
        for ids in groups.values():
            pairs += list(zip(ids, ids[1:]))
    return pairs


def build_milp(case: PlanningCase,
               scenarios: Optional[Sequence[RepresentativeDay]] = None) -> MilpModel:
    """Build the planning MILP for ``case`` over ``scenarios`` (default: the case's own)."""
    scenarios = list(case.scenarios if scenarios is None else scenarios)
    if not scenarios:
        raise FormulationError("at least one scenario is required")
    if len({s.id for s in scenarios}) != len(scenarios):
        raise FormulationError("scenario ids must be unique")
    _check_profiles(case, scenarios)

    m = MilpModel("microgrid_plan")
    net = case.network
    base_kw = case.mva_base * 1000.0
    binary_y = case.curtailment_mode == "binary"
    pc_r = case.res_curtail_penalty

    # first stage
    z = {}
    for g in case.res_candidates:
        z[g.id] = m.add_var(vname("z", g.id), 0.0, 1.0, "binary", priority=1)
        m.add_objective(z[g.id], g.annualized_cost)
    for b in case.battery_candidates:
        z[b.id] = m.add_var(vname("z", b.id), 0.0, 1.0, "binary", priority=1)
        m.add_objective(z[b.id], b.annualized_cost)
    # interchangeable candidates are built in listing order
    for first, second in interchangeable_pairs(case):
        m.add_constraint(f"order[{first}][{second}]", [(z[first], 1.0), (z[second], -1.0)],
                         ">=", 0.0)

    for s in scenarios:
        o = s.id
        tau = s.weight
        for t in range(T):
            # second-stage columns
            pl, ql = {}, {}
            for line in net.lines:
                pl[line.name] = m.add_var(vname("pl", line.name, t, o), -line.pmax, line.pmax)
                ql[line.name] = m.add_var(vname("ql", line.name, t, o), -line.qmax, line.qmax)
            v = {n.id: m.add_var(vname("v", n.id, t, o), n.vmin, n.vmax) for n in net.nodes}

            inj_p = {n.id: [] for n in net.nodes}
            inj_q = {n.id: [] for n in net.nodes}

            for g in case.diesel:
                p = m.add_var(vname("p", g.id, t, o), 0.0, g.pmax)
                q = m.add_var(vname("q", g.id, t, o), g.qmin, g.qmax)
                m.add_objective(p, tau * g.marginal_cost)
                inj_p[g.node].append((p, 1.0))
                inj_q[g.node].append((q, 1.0))

            for g in case.res_candidates:
                avail = g.capacity * s.availability_profile[g.profile_key][t]
                # rows whose bound is zero are already enforced by the column box
                p = m.add_var(vname("p", g.id, t, o), 0.0, avail)
                q = m.add_var(vname("q", g.id, t, o), min(g.qmin, 0.0), max(g.qmax, 0.0))
                if avail > 0.0:
                    m.add_constraint(vname("res_p", g.id, t, o),
                                     [(p, 1.0), (z[g.id], -avail)], "<=", 0.0)
                if g.qmin != 0.0:
                    m.add_constraint(vname("res_qmin", g.id, t, o),
                                     [(q, 1.0), (z[g.id], -g.qmin)], ">=", 0.0)
                if g.qmax != 0.0:
                    m.add_constraint(vname("res_qmax", g.id, t, o),
                                     [(q, 1.0), (z[g.id], -g.qmax)], "<=", 0.0)
                m.add_objective(p, tau * (g.marginal_cost - pc_r))
                m.add_objective(z[g.id], tau * pc_r * avail)
                inj_p[g.node].append((p, 1.0))
                inj_q[g.node].append((q, 1.0))

            for b in case.battery_candidates:
                pc = m.add_var(vname("pc", b.id, t, o), 0.0, b.pc_max)
                pd = m.add_var(vname("pd", b.id, t, o), 0.0, b.pd_max)
                qb = m.add_var(vname("qb", b.id, t, o), min(b.qmin, 0.0), max(b.qmax, 0.0))
                m.add_constraint(vname("bat_pc", b.id, t, o),
                                 [(pc, 1.0), (z[b.id], -b.pc_max)], "<=", 0.0)
                m.add_constraint(vname("bat_pd", b.id, t, o),
                                 [(pd, 1.0), (z[b.id], -b.pd_max)], "<=", 0.0)
                if b.qmin != 0.0:
                    m.add_constraint(vname("bat_qmin", b.id, t, o),
                                     [(qb, 1.0), (z[b.id], -b.qmin)], ">=", 0.0)
                if b.qmax != 0.0:
                    m.add_constraint(vname("bat_qmax", b.id, t, o),
                                     [(qb, 1.0), (z[b.id], -b.qmax)], "<=", 0.0)
                inj_p[b.node] += [(pd, 1.0), (pc, -1.0)]
                inj_q[b.node].append((qb, 1.0))

            for d in case.demands:
                load = d.peak * s.demand_profile[d.profile_key][t]
                if load > 0:
                    y = m.add_var(vname("y", d.id, t, o), 0.0, 1.0,
                                  "binary" if binary_y else "continuous")
                    m.add_objective(y, -tau * d.curtail_penalty * load)
                    m.objective_constant += tau * d.curtail_penalty * load
                else:
                    y = m.add_var(vname("y", d.id, t, o), 1.0, 1.0)
                inj_p[d.node].append((y, -load))
                inj_q[d.node].append((y, -load * d.reactive_ratio))

            # nodal balances: upstream inflow + injections = downstream outflows + served load
            for n in net.nodes:
                rows_p = list(inj_p[n.id])
                rows_q = list(inj_q[n.id])
                up = net.upstream_line(n.id) if not n.is_slack else None
                if up is not None:
                    rows_p.append((pl[up.name], 1.0))
                    rows_q.append((ql[up.name], 1.0))
                for line in net.downstream_lines(n.id):
                    rows_p.append((pl[line.name], -1.0))
                    rows_q.append((ql[line.name], -1.0))
                m.add_constraint(vname("bal_p", n.id, t, o), rows_p, "=", 0.0)
                m.add_constraint(vname("bal_q", n.id, t, o), rows_q, "=", 0.0)

            for line in net.lines:
                m.add_constraint(vname("vdrop", line.name, t, o),
                                 [(v[line.from_node], 1.0), (v[line.to_node], -1.0),
                                  (pl[line.name], -line.r / base_kw),
                                  (ql[line.name], -line.x / base_kw)], "=", 0.0)
                if case.polygon_sides and line.smax is not None:
                    for k, (cs, sn) in enumerate(polygon_rows(case.polygon_sides)):
                        m.add_constraint(f"poly[{line.name}][{k}][{t}][{o}]",
                                         [(pl[line.name], cs), (ql[line.name], sn)],
                                         "<=", line.smax)

            m.add_constraint(f"slack[{t}][{o}]", [(v[net.slack.id], 1.0)], "=", 1.0)

        # battery energy trajectory and daily neutrality
        for b in case.battery_candidates:
            cum = []
            for t in range(T):
                cum.append((m.col(vname("pc", b.id, t, o)), b.eta_c))
                cum.append((m.col(vname("pd", b.id, t, o)), -1.0 / b.eta_d))
                m.add_constraint(vname("bat_emin", b.id, t, o),
                                 cum + [(z[b.id], b.e_ini - b.emin)], ">=", 0.0)
                m.add_constraint(vname("bat_emax", b.id, t, o),
                                 cum + [(z[b.id], b.e_ini - b.emax)], "<=", 0.0)
            m.add_constraint(f"bat_neutral[{b.id}][{o}]", cum, "=", 0.0)
    return m


def values_by_name(model: MilpModel, x) -> dict:
    return {v.name: float(x[j]) for j, v in enumerate(model.variables)}


def investment_cost(case: PlanningCase, built: dict) -> float:
    total = 0.0
    for g in case.res_candidates:
        total += g.annualized_cost * built.get(g.id, 0.0)
    for b in case.battery_candidates:
        total += b.annualized_cost * built.get(b.id, 0.0)
    return total


def dispatch_costs(case: PlanningCase, scenarios: Sequence[RepresentativeDay],
                   values: dict) -> dict:
    """Operational cost components recomputed from dispatch values.

    Independent of the model objective: prices times weighted energies, read
    straight off the named columns. Energies are returned in kWh/yr.
    """
    fuel = curtail = spill_cost = 0.0
    curtailed_kwh = spilled_kwh = 0.0
    for s in scenarios:
        o, tau = s.id, s.weight
        for t in range(T):
            for g in case.diesel:
                fuel += tau * g.marginal_cost * values[vname("p", g.id, t, o)]
            for g in case.res_candidates:
                p = values[vname("p", g.id, t, o)]
                zg = values[vname("z", g.id)]
                avail = g.capacity * s.availability_profile[g.profile_key][t]
                fuel += tau * g.marginal_cost * p
                spill = avail * zg - p
                spill_cost += tau * case.res_curtail_penalty * spill
                spilled_kwh += tau * spill
            for d in case.demands:
                load = d.peak * s.demand_profile[d.profile_key][t]
                lost = load * (1.0 - values[vname("y", d.id, t, o)])
                curtail += tau * d.curtail_penalty * lost
                curtailed_kwh += tau * lost
    return {"generation": fuel, "load_curtailment": curtail, "res_spill": spill_cost,
            "total": fuel + curtail + spill_cost,
            "curtailed_kwh": curtailed_kwh, "spilled_kwh": spilled_kwh}


def battery_energy(case: PlanningCase, scenario: RepresentativeDay, battery_id: str,
                   values: dict) -> np.ndarray:
    """Stored energy after each hour of ``scenario`` (kWh)."""
    b = next(b for b in case.battery_candidates if b.id == battery_id)
    e = b.e_ini * values[vname("z", b.id)]
    out = []
    for t in range(T):
        e += (b.eta_c * values[vname("pc", b.id, t, scenario.id)]
              - values[vname("pd", b.id, t, scenario.id)] / b.eta_d)
        out.append(e)
    return np.array(out)
