"""Bounded-variable revised primal simplex.

The LP is held as ``min c.x  s.t.  A x - s = 0,  lo <= x <= hi,  rlo <= s <= rhi``:
every row gets a logical column ``-e_i`` whose box is the row range, so
equalities, inequalities and ranges are all plain bounds. Nonbasic columns sit
at one of their bounds (or at zero when free); bounds are never turned into
rows.

Phase 1 minimizes the sum of bound violations of the basic variables starting
from any basis, which is what makes branch-and-bound warm starts work: a child
node keeps its parent's basis and only the branched column's box changes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from ..errors import IterationLimit
from ..model import MilpModel

log = logging.getLogger(__name__)

BASIC, AT_LOWER, AT_UPPER, FREE = 0, 1, 2, 3

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 30
DEGENERATE_STREAK = 50
DENSE_LIMIT = 200
PERTURB = 1e-6
PERTURB_SEED = 20130101


@dataclass
class LpProblem:
    """Compiled arrays of an LP; ``lo``/``hi`` may be overridden per solve."""

    A: sp.csc_matrix
    c: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    row_lo: np.ndarray
    row_hi: np.ndarray
    constant: float = 0.0
    integer: np.ndarray = None  # column indices of binaries
    priority: np.ndarray = None  # branching priority per binary in ``integer``

    @classmethod
    def from_model(cls, model: MilpModel) -> "LpProblem":
        lo, hi = model.bounds()
        rlo, rhi = model.row_bounds()
        ints = np.array(model.binaries(), dtype=int)
        prio = np.array([model.variables[j].priority for j in ints], dtype=int)
        return cls(model.matrix().tocsc(), model.cost_vector(), lo, hi, rlo, rhi,
                   model.objective_constant, ints, prio)

    @property
    def shape(self):
        return self.A.shape


@dataclass
class BasisState:
    basis: np.ndarray  # (m,) column indices in [0, n + m)
    status: np.ndarray  # (n + m,) int8

    def copy(self) -> "BasisState":
        return BasisState(self.basis.copy(), self.status.copy())


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: float
    values: np.ndarray  # structural columns
    iterations: int
    duals: Optional[np.ndarray] = None  # row multipliers y
    reduced_costs: Optional[np.ndarray] = None  # structural reduced costs
    basis: Optional[BasisState] = None
    infeasibility: float = 0.0  # phase-1 optimum when infeasible
    farkas: Optional[np.ndarray] = None  # phase-1 row multipliers certifying infeasibility
    row_activity: Optional[np.ndarray] = None

    def value_map(self, model: MilpModel) -> dict:
        return {v.name: float(self.values[j]) for j, v in enumerate(model.variables)}


class _DenseInverse:
    def __init__(self, B: np.ndarray):
        self.inv = np.linalg.inv(B)
        if not np.all(np.isfinite(self.inv)):
            raise np.linalg.LinAlgError("singular basis")

    def ftran(self, v):
        return self.inv @ v

    def ftran_sparse(self, idx, vals):
        return self.inv[:, idx] @ vals

    def btran(self, cb):
        return cb @ self.inv

    def update(self, r, alpha):
        row = self.inv[r] / alpha[r]
        self.inv -= np.outer(alpha, row)
        self.inv[r] = row


class _SparseLU:
    """Sparse LU of the refactored basis plus product-form eta updates."""

    def __init__(self, B: sp.csc_matrix):
        self.m = B.shape[0]
        self.lu = spla.splu(B.tocsc(), permc_spec="COLAMD")
        self.etas = []

    def ftran(self, v):
        w = self.lu.solve(np.asarray(v, dtype=float))
        for r, idx, vals, piv in self.etas:
            wr = w[r] / piv
            if wr != 0.0:
                w[idx] -= vals * wr
            w[r] = wr
        return w

    def ftran_sparse(self, idx, vals):
        v = np.zeros(self.m)
        v[idx] = vals
        return self.ftran(v)

    def btran(self, cb):
        u = np.array(cb, dtype=float)
        for r, idx, vals, piv in reversed(self.etas):
            u[r] = (u[r] - vals @ u[idx]) / piv
        return self.lu.solve(u, trans="T")

    def update(self, r, alpha):
        nz = np.flatnonzero(alpha)
        nz = nz[nz != r]
        self.etas.append((r, nz, alpha[nz].copy(), alpha[r]))


class _Simplex:
    def __init__(self, prob: LpProblem, lo, hi, feas_tol, max_iter):
        self.prob = prob
        A = prob.A
        self.m, self.n = A.shape
        m, n = self.m, self.n
        self.N = n + m
        self.A = A
        self.AT = A.T.tocsr()
        self.AI = sp.hstack([A, -sp.identity(m, format="csc")], format="csc")
        self.L = np.concatenate([lo, prob.row_lo]).astype(float)
        self.U = np.concatenate([hi, prob.row_hi]).astype(float)
        self.cost = np.concatenate([prob.c, np.zeros(m)])
        self.feas_tol = feas_tol
        self.max_iter = max_iter
        self.iters = 0
        cmax = float(np.max(np.abs(prob.c))) if n else 1.0
        self.opt_tol = 1e-9 * max(1.0, cmax)
        self.movable = self.U > self.L
        self.true_L = self.L.copy()
        self.true_U = self.U.copy()
        self.perturbed = False
        self.may_perturb = True
        self.true_cost = self.cost.copy()
        self.costs_perturbed = False

    def perturb(self, cols):
        """Widen the finite bounds of ``cols`` by a small random amount.

        Used once per solve when a degenerate streak is detected: the basic
        columns sitting on their bounds get room to move, which breaks the ties
        that make the vertex stall. Widening keeps the point feasible. The true
        bounds come back in :meth:`restore` before the final clean-up pass,
        which falls back to Bland's rule instead.
        """
        rng = np.random.default_rng(PERTURB_SEED)
        cols = np.asarray(cols)
        for bounds, sign in ((self.L, -1.0), (self.U, 1.0)):
            b = bounds[cols]
            r = rng.random(cols.size)
            mask = self.movable[cols] & np.isfinite(b)
            b[mask] += sign * PERTURB * (1.0 + np.abs(b[mask])) * (1.0 + r[mask])
            bounds[cols] = b
        self.perturbed = True
        self.may_perturb = False

    def restore(self):
        if not self.perturbed:
            return
        self.L[:] = self.true_L
        self.U[:] = self.true_U
        self.perturbed = False
        self._snap_nonbasic()

    def _snap_nonbasic(self):
        lower = self.status == AT_LOWER
        upper = self.status == AT_UPPER
        self.x[lower] = self.L[lower]
        self.x[upper] = self.U[upper]
        if hasattr(self, "factor"):
            self.recompute_basics()

    # column access for the combined matrix [A, -I]
    def column(self, j):
        a, b = self.AI.indptr[j], self.AI.indptr[j + 1]
        return self.AI.indices[a:b], self.AI.data[a:b]

    def basis_matrix(self, dense: bool):
        B = self.AI[:, self.basis]
        return B.toarray() if dense else B

    def set_start(self, warm: Optional[BasisState]):
        m, n = self.m, self.n
        if warm is None:
            self.basis = np.arange(n, n + m)
            self.status = np.empty(self.N, dtype=np.int8)
            self.status[n:] = BASIC
            self.status[:n] = AT_LOWER
        else:
            self.basis = warm.basis.copy()
            self.status = warm.status.copy()
        self.x = np.zeros(self.N)
        nb = self.status != BASIC
        fin_l = np.isfinite(self.L)
        fin_u = np.isfinite(self.U)
        upper = nb & fin_u & ((self.status == AT_UPPER) | ~fin_l)
        lower = nb & ~upper & fin_l
        free = nb & ~upper & ~lower
        self.status[upper] = AT_UPPER
        self.status[lower] = AT_LOWER
        self.status[free] = FREE
        self.x[upper] = self.U[upper]
        self.x[lower] = self.L[lower]

    def refactor(self):
        dense = self.m <= DENSE_LIMIT
        try:
            self.factor = self._factorize(dense)
        except (np.linalg.LinAlgError, RuntimeError):
            self.repair_basis()
            self.factor = self._factorize(dense)
        self.since_refactor = 0
        self.recompute_basics()

    def _factorize(self, dense):
        B = self.basis_matrix(dense)
        return _DenseInverse(B) if dense else _SparseLU(B)

    def repair_basis(self):
        """Swap dependent basic columns for logicals of uncovered rows."""
        B = self.basis_matrix(True)
        _, R, perm = sla.qr(B, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > 1e-9 * max(1.0, diag[0] if diag.size else 1.0)))
        keep = perm[:rank]
        drop = perm[rank:]
        # rows left uncovered: largest components in the orthogonal complement
        Q, _ = np.linalg.qr(B[:, keep], mode="complete") if rank else (np.eye(self.m), None)
        comp = Q[:, rank:]
        _, _, rperm = sla.qr(comp.T, mode="economic", pivoting=True)
        rows = rperm[:len(drop)]
        log.debug("basis repair: %d dependent columns replaced", len(drop))
        for k, i in zip(drop, rows):
            j = self.basis[k]
            self.status[j] = AT_LOWER if np.isfinite(self.L[j]) else (
                AT_UPPER if np.isfinite(self.U[j]) else FREE)
            self.x[j] = (self.L[j] if self.status[j] == AT_LOWER else
                         self.U[j] if self.status[j] == AT_UPPER else 0.0)
            # a kept logical spans its own row, so this one is currently nonbasic
            logical = self.n + int(i)
            self.basis[k] = logical
            self.status[logical] = BASIC

    def recompute_basics(self):
        nb = self.status != BASIC
        xs = np.where(nb, self.x, 0.0)
        rhs = -(self.A @ xs[:self.n]) + xs[self.n:]
        self.x[self.basis] = self.factor.ftran(rhs)
        if self.m:
            resid = self.A @ self.x[:self.n] - self.x[self.n:]
            err = float(np.max(np.abs(resid)))
            if err > 1e-6:
                log.warning("basis residual %.3e after refactorization", err)

    def start(self, warm):
        self.set_start(warm)
        try:
            self.refactor()
        except (np.linalg.LinAlgError, RuntimeError, ValueError):
            if warm is None:
                raise
            self.set_start(None)
            self.refactor()

    def infeasibilities(self):
        xb = self.x[self.basis]
        lb = self.L[self.basis]
        ub = self.U[self.basis]
        below = xb < lb - self.feas_tol
        above = xb > ub + self.feas_tol
        return below, above

    def reduced_costs(self, y):
        d = self.cost.copy()
        d[:self.n] -= self.AT @ y
        d[self.n:] += y
        return d

    def choose_entering(self, d, bland):
        st = self.status
        score = np.zeros(self.N)
        tol = self.opt_tol if self.phase == 2 else 1e-11
        lower = (st == AT_LOWER) & self.movable & (d < -tol)
        upper = (st == AT_UPPER) & self.movable & (d > tol)
        free = (st == FREE) & (np.abs(d) > tol)
        score[lower] = -d[lower]
        score[upper] = d[upper]
        score[free] = np.abs(d[free])
        cand = np.flatnonzero(score)
        if cand.size == 0:
            return -1
        if bland:
            return int(cand[0])
        return int(cand[np.argmax(score[cand])])

    def ratio_test(self, g, bland):
        """Step length and leaving row for basic rates of change ``g``."""
        xb = self.x[self.basis]
        lb = self.L[self.basis]
        ub = self.U[self.basis]
        tol = self.feas_tol
        ratios = np.full(self.m, np.inf)
        to_upper = np.zeros(self.m, dtype=bool)
        dec = g < -PIVOT_TOL
        inc = g > PIVOT_TOL
        if self.phase == 1:
            below = xb < lb - tol
            above = xb > ub + tol
            ok = ~below & ~above
            # feasible basics stop at the bound they approach
            m1 = ok & dec & np.isfinite(lb)
            ratios[m1] = (xb[m1] - lb[m1]) / -g[m1]
            m2 = ok & inc & np.isfinite(ub)
            ratios[m2] = (ub[m2] - xb[m2]) / g[m2]
            to_upper[m2] = True
            # infeasible basics stop when they regain feasibility
            m3 = below & inc
            ratios[m3] = (lb[m3] - xb[m3]) / g[m3]
            m4 = above & dec
            ratios[m4] = (xb[m4] - ub[m4]) / -g[m4]
            to_upper[m4] = True
            ratios = np.maximum(ratios, 0.0)
            theta = ratios.min() if self.m else np.inf
            if not math.isfinite(theta):
                return np.inf, -1, False
            ties = np.flatnonzero(ratios <= theta + 1e-12)
        else:
            m1 = dec & np.isfinite(lb)
            m2 = inc & np.isfinite(ub)
            relaxed = np.full(self.m, np.inf)
            relaxed[m1] = (xb[m1] - lb[m1] + tol) / -g[m1]
            relaxed[m2] = (ub[m2] + tol - xb[m2]) / g[m2]
            theta_max = relaxed.min() if self.m else np.inf
            if not math.isfinite(theta_max):
                return np.inf, -1, False
            ratios[m1] = (xb[m1] - lb[m1]) / -g[m1]
            ratios[m2] = (ub[m2] - xb[m2]) / g[m2]
            to_upper[m2] = True
            ties = np.flatnonzero(ratios <= theta_max)
        if bland:
            pick = ties[np.argmin(self.basis[ties])]
        else:
            pick = ties[np.argmax(np.abs(g[ties]))]
        return max(0.0, float(ratios[pick])), int(pick), bool(to_upper[pick])

    def iterate(self, phase):
        """Run one phase to completion; returns 'optimal' | 'unbounded' | 'stalled'."""
        self.phase = phase
        bland = False
        streak = 0
        while True:
            if self.iters >= self.max_iter:
                raise IterationLimit(f"simplex exceeded {self.max_iter} iterations")
            if phase == 1:
                below, above = self.infeasibilities()
                if not below.any() and not above.any():
                    return "optimal"
                cb = np.where(below, -1.0, np.where(above, 1.0, 0.0))
                y = self.factor.btran(cb)
                d = np.zeros(self.N)
                d[:self.n] = -(self.AT @ y)
                d[self.n:] = y
                d[self.basis] = 0.0
            else:
                y = self.factor.btran(self.cost[self.basis])
                d = self.reduced_costs(y)
                d[self.basis] = 0.0
            q = self.choose_entering(d, bland)
            if q < 0:
                self.last_y = y
                self.last_d = d
                return "optimal" if phase == 2 else "stalled"

            direction = 1.0 if (self.status[q] == AT_LOWER or
                                (self.status[q] == FREE and d[q] < 0)) else -1.0
            idx, vals = self.column(q)
            alpha = self.factor.ftran_sparse(idx, vals)
            g = -direction * alpha
            theta, r, leave_upper = self.ratio_test(g, bland)
            flip = self.U[q] - self.L[q]
            self.iters += 1

            if r < 0 and not math.isfinite(flip):
                if phase == 2:
                    self.ray = q
                    return "unbounded"
                return "stalled"
            if flip <= theta:
                self.x[self.basis] += g * flip
                self.x[q] = self.U[q] if direction > 0 else self.L[q]
                self.status[q] = AT_UPPER if direction > 0 else AT_LOWER
                theta = flip
            else:
                leaving = self.basis[r]
                self.x[self.basis] += g * theta
                self.x[q] += direction * theta
                self.x[leaving] = self.U[leaving] if leave_upper else self.L[leaving]
                self.status[leaving] = AT_UPPER if leave_upper else AT_LOWER
                self.status[q] = BASIC
                self.basis[r] = q
                self.factor.update(r, alpha)
                self.since_refactor += 1
                if self.since_refactor >= REFACTOR_EVERY:
                    self.refactor()

            if theta <= 1e-12:
                streak += 1
                if streak >= DEGENERATE_STREAK:
                    if self.may_perturb:
                        self.perturb(self.basis)
                        streak = 0
                    else:
                        bland = True
            else:
                streak = 0
                bland = False

    def make_dual_feasible(self) -> bool:
        """Flip boxed nonbasic columns whose reduced cost has the wrong sign.

        Returns False when a wrong-signed column has no opposite bound to move
        to, in which case the primal method has to take over.
        """
        y = self.factor.btran(self.cost[self.basis])
        d = self.reduced_costs(y)
        tol = self.opt_tol
        st = self.status
        wrong_lower = (st == AT_LOWER) & self.movable & (d < -tol)
        wrong_upper = (st == AT_UPPER) & self.movable & (d > tol)
        wrong_free = (st == FREE) & (np.abs(d) > tol)
        if wrong_free.any():
            return False
        fin_u = np.isfinite(self.U)
        fin_l = np.isfinite(self.L)
        if np.any(wrong_lower & ~fin_u) or np.any(wrong_upper & ~fin_l):
            return False
        if wrong_lower.any() or wrong_upper.any():
            st[wrong_lower] = AT_UPPER
            self.x[wrong_lower] = self.U[wrong_lower]
            st[wrong_upper] = AT_LOWER
            self.x[wrong_upper] = self.L[wrong_upper]
            self.recompute_basics()
        return True

    def dual_iterate(self, max_stall: int = 50) -> str:
        """Bounded dual simplex from a dual feasible basis.

        The ratio test is the long-step variant: boxed columns whose breakpoint
        comes first are flipped to their other bound for as long as the leaving
        row stays infeasible, so one pivot can pass many breakpoints. A run of
        dual degenerate pivots switches on a small cost perturbation (undone by
        :meth:`restore_costs`).

        Returns 'optimal' once the basis is primal feasible, 'infeasible' when a
        violated row cannot be repaired (its ``rho`` is kept in
        ``self.ray_row``), or 'fallback' when the pivot is numerically unsafe.
        """
        self.phase = 2
        stall = 0
        tol = self.feas_tol
        dtol = self.opt_tol
        boxed = np.isfinite(self.L) & np.isfinite(self.U)
        width = np.full(self.N, np.inf)
        width[boxed] = self.U[boxed] - self.L[boxed]
        d = None
        while True:
            if self.iters >= self.max_iter:
                raise IterationLimit(f"simplex exceeded {self.max_iter} iterations")
            xb = self.x[self.basis]
            lb = self.L[self.basis]
            ub = self.U[self.basis]
            viol = np.where(xb < lb - tol, lb - xb, np.where(xb > ub + tol, xb - ub, 0.0))
            if not viol.any():
                return "optimal"
            r = int(np.argmax(viol))
            s = 1.0 if xb[r] < lb[r] else -1.0
            target = lb[r] if s > 0 else ub[r]

            e = np.zeros(self.m)
            e[r] = 1.0
            rho = self.factor.btran(e)
            row = np.empty(self.N)
            row[:self.n] = self.AT @ rho
            row[self.n:] = -rho
            if d is None:
                d = self.reduced_costs(self.factor.btran(self.cost[self.basis]))
                d[self.basis] = 0.0

            st = self.status
            sa = s * row
            elig = (((st == AT_LOWER) & (sa < -PIVOT_TOL)) |
                    ((st == AT_UPPER) & (sa > PIVOT_TOL))) & self.movable
            elig |= (st == FREE) & (np.abs(row) > PIVOT_TOL)
            cand = np.flatnonzero(elig)
            absa = np.abs(row[cand])
            ratios = np.abs(d[cand]) / absa
            order = np.argsort(ratios, kind="stable")
            # walk the breakpoints while the leaving row's infeasibility lasts
            slope = viol[r]
            k = 0
            while k < order.size:
                j = cand[order[k]]
                slope -= absa[order[k]] * width[j]
                # reaching the bound exactly still counts as repairable
                if slope <= tol:
                    break
                k += 1
            if k == order.size:
                if self.since_refactor:
                    # only trust the verdict on a fresh factorization
                    self.refactor()
                    d = None
                    continue
                self.ray_row = rho * s
                return "infeasible"
            flips = cand[order[:k]]
            # Harris-style choice among the breakpoints tied with the k-th one
            tail = order[k:]
            tmax = (np.abs(d[cand[tail[0]]]) + dtol) / absa[tail[0]]
            near = tail[ratios[tail] <= tmax]
            pick = near[int(np.argmax(absa[near]))]
            q = int(cand[pick])
            tau = float(ratios[pick])

            if flips.size:
                delta = np.where(st[flips] == AT_LOWER, width[flips], -width[flips])
                shift = np.zeros(self.m)
                for j, dj in zip(flips, delta):
                    idx, vals = self.column(j)
                    shift[idx] += vals * dj
                self.x[self.basis] -= self.factor.ftran(shift)
                self.x[flips] += delta
                st[flips] = np.where(st[flips] == AT_LOWER, AT_UPPER, AT_LOWER)

            idx, vals = self.column(q)
            alpha = self.factor.ftran_sparse(idx, vals)
            if abs(alpha[r]) < PIVOT_TOL:
                return "fallback"
            step = (self.x[self.basis[r]] - target) / alpha[r]
            leaving = self.basis[r]
            self.x[self.basis] -= alpha * step
            self.x[q] += step
            self.x[leaving] = target
            st[leaving] = AT_LOWER if s > 0 else AT_UPPER
            st[q] = BASIC
            self.basis[r] = q
            self.factor.update(r, alpha)
            # dual step along the pivot row; the leaving column keeps s*tau
            d += (s * tau) * row
            d[q] = 0.0
            self.iters += 1
            self.since_refactor += 1
            if self.since_refactor >= REFACTOR_EVERY:
                self.refactor()
                d = None
            stall = stall + 1 if tau <= 1e-12 else 0
            if stall >= max_stall:
                if self.costs_perturbed:
                    return "fallback"
                self.perturb_costs()
                d = None
                stall = 0

    def perturb_costs(self):
        """Push nonbasic reduced costs away from zero, in their dual feasible direction."""
        rng = np.random.default_rng(PERTURB_SEED + 1)
        delta = PERTURB * (1.0 + np.abs(self.cost)) * (1.0 + rng.random(self.N))
        lower = (self.status == AT_LOWER) & self.movable
        upper = (self.status == AT_UPPER) & self.movable
        self.cost[lower] += delta[lower]
        self.cost[upper] -= delta[upper]
        self.costs_perturbed = True

    def restore_costs(self):
        if self.costs_perturbed:
            self.cost[:] = self.true_cost
            self.costs_perturbed = False

    def phase1_measure(self):
        xb = self.x[self.basis]
        lb = self.L[self.basis]
        ub = self.U[self.basis]
        return float(np.sum(np.maximum(0.0, lb - xb)) + np.sum(np.maximum(0.0, xb - ub)))


def solve_lp(problem, feas_tol: float = FEAS_TOL, max_iter: Optional[int] = None,
             lo=None, hi=None, warm: Optional[BasisState] = None) -> LpSolution:
    """Solve the continuous relaxation of ``problem`` (an :class:`LpProblem` or model).

    ``lo``/``hi`` override the structural column bounds; ``warm`` restarts from a
    previous basis. Raises :class:`IterationLimit` when ``max_iter`` pivots are
    exceeded.
    """
    prob = LpProblem.from_model(problem) if isinstance(problem, MilpModel) else problem
    m, n = prob.shape
    lo = prob.lo if lo is None else np.asarray(lo, dtype=float)
    hi = prob.hi if hi is None else np.asarray(hi, dtype=float)
    if max_iter is None:
        max_iter = max(20_000, 50 * (m + n))

    if np.any(lo > hi + feas_tol) or np.any(prob.row_lo > prob.row_hi + feas_tol):
        return LpSolution("infeasible", math.inf, np.clip(np.zeros(n), lo, hi), 0,
                          infeasibility=float(np.max(np.maximum(lo - hi, 0.0), initial=0.0)))

    sx = _Simplex(prob, lo, hi, feas_tol, max_iter)
    sx.start(warm)

    if sx.make_dual_feasible():
        status = sx.dual_iterate()
        sx.restore_costs()
        if status == "infeasible":
            return LpSolution("infeasible", math.inf, sx.x[:n].copy(), sx.iters,
                              basis=BasisState(sx.basis.copy(), sx.status.copy()),
                              infeasibility=sx.phase1_measure(), farkas=sx.ray_row)

    for _attempt in range(4):
        status = sx.iterate(1)
        if status != "optimal":
            # the widened box is a relaxation, so infeasibility there is final
            sx.restore()
            sx.refactor()
            below, above = sx.infeasibilities()
            if below.any() or above.any():
                y = sx.last_y if hasattr(sx, "last_y") else None
                x = sx.x[:n].copy()
                return LpSolution("infeasible", math.inf, x, sx.iters,
                                  basis=BasisState(sx.basis.copy(), sx.status.copy()),
                                  infeasibility=sx.phase1_measure(), farkas=y)
            continue
        status = sx.iterate(2)
        if status == "unbounded":
            sx.restore()
            return LpSolution("unbounded", -math.inf, sx.x[:n].copy(), sx.iters,
                              basis=BasisState(sx.basis.copy(), sx.status.copy()))
        if sx.perturbed:
            # back to the true box; the next pass cleans up what moved
            sx.restore()
            sx.refactor()
            continue
        # confirm on a fresh factorization; drift sends us back to phase 1
        if sx.since_refactor:
            sx.refactor()
        below, above = sx.infeasibilities()
        if not below.any() and not above.any():
            break
    y = sx.factor.btran(sx.cost[sx.basis])
    d = sx.reduced_costs(y)
    d[sx.basis] = 0.0
    x = sx.x[:n].copy()
    # a fixed column has one admissible value, even when it sits in the basis
    pinned = lo == hi
    x[pinned] = lo[pinned]
    obj = float(prob.c @ x + prob.constant)
    return LpSolution("optimal", obj, x, sx.iters, duals=y, reduced_costs=d[:n],
                      basis=BasisState(sx.basis.copy(), sx.status.copy()),
                      row_activity=sx.x[n:].copy())


def dual_objective(problem: LpProblem, sol: LpSolution, lo=None, hi=None) -> float:
    """Lagrangian dual value at the solution's row multipliers.

    ``sum_j min over [lo_j, hi_j] of d_j x_j`` over structural and logical
    columns plus the objective constant; equals the primal optimum when the
    multipliers are dual feasible.
    """
    lo = problem.lo if lo is None else lo
    hi = problem.hi if hi is None else hi
    y = sol.duals
    d_struct = problem.c - problem.A.T @ y
    d_logic = y
    total = problem.constant

    # reduced costs at roundoff level count as zero
    tol = 1e-9 * max(1.0, float(np.max(np.abs(problem.c), initial=0.0)))

    def part(d, l, u):
        out = 0.0
        for dj, lj, uj in zip(d, l, u):
            if dj > tol:
                out += dj * lj
            elif dj < -tol:
                out += dj * uj
        return out

    total += part(d_struct, lo, hi)
    total += part(d_logic, problem.row_lo, problem.row_hi)
    return float(total)
