"""Best-bound branch-and-bound over binary columns."""

from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from ..errors import InfeasibleIncumbent
from ..model import MilpModel
from .simplex import FEAS_TOL, BasisState, LpProblem, LpSolution, solve_lp

log = logging.getLogger(__name__)

INT_TOL = 1e-6
GAP_TOL = 1e-6


@dataclass
class BnbResult:
    status: str  # optimal | infeasible | unbounded | gap_limit | node_limit
    incumbent: Optional[LpSolution]
    best_bound: float
    explored_nodes: int
    root_bound: float = math.nan
    lp_iterations: int = 0
    wall_time: float = 0.0
    history: list = field(default_factory=list)  # (node, incumbent objective) improvements

    @property
    def objective(self) -> float:
        return self.incumbent.objective if self.incumbent is not None else math.inf

    @property
    def gap(self) -> float:
        if self.incumbent is None or not math.isfinite(self.best_bound):
            return math.inf
        obj = self.incumbent.objective
        return max(0.0, obj - self.best_bound) / max(1.0, abs(obj))


def _cutoff(obj: float, gap_tol: float) -> float:
    return obj - gap_tol * max(1.0, abs(obj))


def _most_fractional(x: np.ndarray, cols: np.ndarray, int_tol: float,
                     priority: Optional[np.ndarray] = None) -> int:
    """Branching column: most fractional among the highest-priority fractional binaries."""
    if cols.size == 0:
        return -1
    v = x[cols]
    frac = np.abs(v - np.round(v))
    fractional = frac > int_tol
    if not fractional.any():
        return -1
    if priority is not None:
        fractional &= priority == priority[fractional].max()
    # distance from 0.5; argmin returns the lowest column on ties
    score = np.abs((v - np.floor(v)) - 0.5)
    score[~fractional] = np.inf
    return int(cols[int(np.argmin(score))])


def _reduced_cost_fixings(sol: LpSolution, cols: np.ndarray, lo, hi, cutoff: float):
    """Binaries whose flip alone would push the node bound past ``cutoff``."""
    if sol.reduced_costs is None or cols.size == 0 or not math.isfinite(cutoff):
        return ()
    free = lo[cols] < hi[cols]
    d = sol.reduced_costs[cols]
    x = sol.values[cols]
    slack = cutoff - sol.objective
    at0 = free & (x <= INT_TOL) & (d > slack)
    at1 = free & (x >= 1.0 - INT_TOL) & (-d > slack)
    return (tuple((int(j), 0.0) for j in cols[at0])
            + tuple((int(j), 1.0) for j in cols[at1]))


def implied_bounds(A: sp.csr_matrix, row_lo, row_hi, lo, hi, feas_tol=FEAS_TOL):
    """Column boxes tightened by rows that have a single unfixed column left.

    One pass, no propagation. Bounds that cross by less than ``feas_tol``
    (roundoff) collapse onto the upper one. A unit whose binary is fixed at 0
    thus gets the exact box [0, 0].
    """
    fixed = lo == hi
    act = A @ np.where(fixed, lo, 0.0)
    free = (A @ sp.diags((~fixed).astype(float))).tocsr()
    free.eliminate_zeros()
    rows = np.flatnonzero(np.diff(free.indptr) == 1)
    lo, hi = lo.copy(), hi.copy()
    if rows.size == 0:
        return lo, hi
    cols = free.indices[free.indptr[rows]]
    a = free.data[free.indptr[rows]]
    with np.errstate(invalid="ignore"):
        r_lo = (row_lo[rows] - act[rows]) / a
        r_hi = (row_hi[rows] - act[rows]) / a
    new_lo = np.where(a > 0, r_lo, r_hi)
    new_hi = np.where(a > 0, r_hi, r_lo)
    np.maximum.at(lo, cols, np.nan_to_num(new_lo, nan=-np.inf))
    np.minimum.at(hi, cols, np.nan_to_num(new_hi, nan=np.inf))
    close = (lo > hi) & (lo <= hi + feas_tol)
    lo[close] = hi[close]
    return lo, hi


def check_incumbent(prob: LpProblem, x, feas_tol=FEAS_TOL, int_tol=INT_TOL) -> float:
    """Objective of ``x`` if it is MILP-feasible within tolerances, else raise."""
    x = np.asarray(x, dtype=float)
    if x.shape != (prob.shape[1],):
        raise InfeasibleIncumbent("incumbent has the wrong length")
    if np.any(x < prob.lo - feas_tol) or np.any(x > prob.hi + feas_tol):
        raise InfeasibleIncumbent("incumbent violates a column bound")
    act = prob.A @ x
    if np.any(act < prob.row_lo - feas_tol) or np.any(act > prob.row_hi + feas_tol):
        worst = float(np.max(np.maximum(prob.row_lo - act, act - prob.row_hi)))
        raise InfeasibleIncumbent(f"incumbent violates a row by {worst:.3e}")
    if prob.integer is not None and prob.integer.size:
        v = x[prob.integer]
        if np.any(np.abs(v - np.round(v)) > int_tol):
            raise InfeasibleIncumbent("incumbent has fractional binaries")
    return float(prob.c @ x + prob.constant)


def solve_milp(model, gap_tol: float = GAP_TOL, node_limit: int = 1_000_000,
               time_limit: Optional[float] = None, int_tol: float = INT_TOL,
               feas_tol: float = FEAS_TOL, incumbent=None,
               dive: bool = True) -> BnbResult:
    """Branch-and-bound on the binary columns of ``model``.

    Open nodes are processed lowest-bound first (ties: creation order), except
    that before any incumbent exists the search dives depth-first on the most
    recent child. Branching picks the most fractional binary, lowest column on
    ties; when the model assigns branching priorities, only the fractional
    binaries of the highest priority compete. Once an incumbent exists,
    binaries whose reduced cost exceeds the remaining gap are fixed in the
    children. ``incumbent`` (a full column vector) seeds the cutoff.
    """
    t0 = time.perf_counter()
    prob = LpProblem.from_model(model) if isinstance(model, MilpModel) else model
    ints = prob.integer if prob.integer is not None else np.array([], dtype=int)
    prio = prob.priority if prob.priority is not None and prob.priority.size else None
    if prio is not None and np.all(prio == prio[0]):
        prio = None
    base_lo = prob.lo.copy()
    base_hi = prob.hi.copy()
    A_rows = prob.A.tocsr()

    best: Optional[LpSolution] = None
    best_obj = math.inf
    history = []
    if incumbent is not None:
        best_obj = check_incumbent(prob, incumbent, feas_tol, int_tol)
        best = LpSolution("optimal", best_obj, np.asarray(incumbent, dtype=float).copy(), 0)
        history.append((0, best_obj))

    seq = itertools.count()
    heap = []  # (bound, seq, fixings, basis)
    stack = []  # dive: most recent child first
    heapq.heappush(heap, (-math.inf, next(seq), (), None))
    nodes = 0
    lp_iters = 0
    pruned_bound = math.inf
    root_bound = math.nan
    status = None

    def bounds_for(fixings):
        lo = base_lo.copy()
        hi = base_hi.copy()
        for j, val in fixings:
            lo[j] = hi[j] = val
        return lo, hi

    while heap or stack:
        if dive and best is None and stack:
            entry = stack.pop()
        else:
            if stack:
                for e in stack:
                    heapq.heappush(heap, e)
                stack.clear()
            entry = heapq.heappop(heap)
        bound, _, fixings, basis = entry
        if bound >= _cutoff(best_obj, gap_tol):
            pruned_bound = min(pruned_bound, bound)
            continue
        if nodes >= node_limit:
            heapq.heappush(heap, entry)
            status = "node_limit"
            break
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            heapq.heappush(heap, entry)
            status = "gap_limit"
            break

        lo, hi = bounds_for(fixings)
        sol = solve_lp(prob, feas_tol=feas_tol, lo=lo, hi=hi, warm=basis)
        nodes += 1
        lp_iters += sol.iterations
        if nodes == 1:
            root_bound = sol.objective
            if sol.status == "unbounded":
                return BnbResult("unbounded", None, -math.inf, nodes, -math.inf, lp_iters,
                                 time.perf_counter() - t0, history)
        if sol.status != "optimal":
            continue
        if sol.objective >= _cutoff(best_obj, gap_tol):
            pruned_bound = min(pruned_bound, sol.objective)
            continue

        j = _most_fractional(sol.values, ints, int_tol, prio)
        if j < 0:
            if ints.size:
                # polish: re-solve with binaries pinned to their rounded values
                fixed = tuple((int(c), float(round(sol.values[c]))) for c in ints)
                plo, phi = implied_bounds(A_rows, prob.row_lo, prob.row_hi,
                                          *bounds_for(fixed), feas_tol)
                polished = solve_lp(prob, feas_tol=feas_tol, lo=plo, hi=phi, warm=sol.basis)
                lp_iters += polished.iterations
                if polished.status == "optimal":
                    sol = polished
            if sol.objective < best_obj:
                best, best_obj = sol, sol.objective
                history.append((nodes, best_obj))
                log.debug("node %d: incumbent %.9g", nodes, best_obj)
            continue

        v = sol.values[j]
        fixings = fixings + _reduced_cost_fixings(sol, ints, lo, hi, _cutoff(best_obj, gap_tol))
        children = [(fixings + ((j, 0.0),), abs(v - 0.0)),
                    (fixings + ((j, 1.0),), abs(v - 1.0))]
        if dive and best is None:
            # explore the nearer rounding first
            children.sort(key=lambda c: c[1], reverse=True)
            for fx, _ in children:
                stack.append((sol.objective, next(seq), fx, sol.basis))
        else:
            for fx, _ in children:
                heapq.heappush(heap, (sol.objective, next(seq), fx, sol.basis))

    wall = time.perf_counter() - t0
    open_bounds = [e[0] for e in heap] + [e[0] for e in stack]
    lowest_open = min(open_bounds) if open_bounds else math.inf
    best_bound = min(lowest_open, pruned_bound, best_obj)
    if status is None:
        status = "optimal" if best is not None else "infeasible"
    if best is None:
        best_bound = lowest_open if status != "infeasible" else math.inf
    return BnbResult(status, best, best_bound, nodes, root_bound, lp_iters, wall, history)


def warm_start(model, incumbent, **kwargs) -> BnbResult:
    """Branch-and-bound seeded with a feasible ``incumbent`` as the initial cutoff.

    ``incumbent`` is a full column vector or a name -> value mapping. Raises
    :class:`InfeasibleIncumbent` when it violates bounds, rows or integrality.
    """
    if isinstance(incumbent, dict):
        if not isinstance(model, MilpModel):
            raise TypeError("a name -> value incumbent needs a MilpModel")
        x = np.zeros(model.n_vars)
        for name, val in incumbent.items():
            x[model.col(name)] = val
        incumbent = x
    return solve_milp(model, incumbent=incumbent, **kwargs)
