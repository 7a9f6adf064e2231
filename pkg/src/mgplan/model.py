"""Solver-agnostic MILP container."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np
import scipy.sparse as sp

from .errors import FormulationError

INF = math.inf
SENSES = ("<=", "=", ">=")


@dataclass
class Variable:
    name: str
    kind: str = "continuous"  # "continuous" | "binary"
    lower: float = 0.0
    upper: float = INF
    priority: int = 0  # branching priority of a binary (higher branches first)


@dataclass
class Constraint:
    name: str
    terms: dict  # column -> coefficient, insertion-ordered
    sense: str
    rhs: float


Terms = Union[Mapping[int, float], Iterable[tuple]]


@dataclass
class MilpModel:
    """Minimization MILP: ``min c.x + const`` over linear rows and variable boxes.

    Variables are addressed by column index; ``var_index`` maps the structured
    name (``kind[entity][t][o]``) to the column.
    """

    name: str = "model"
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    objective_constant: float = 0.0
    var_index: dict = field(default_factory=dict)
    con_index: dict = field(default_factory=dict)

    def add_var(self, name: str, lower: float = 0.0, upper: float = INF,
                kind: str = "continuous", priority: int = 0) -> int:
        if name in self.var_index:
            raise FormulationError(f"duplicate variable name {name!r}")
        if kind == "binary":
            lower, upper = max(0.0, lower), min(1.0, upper)
        elif kind != "continuous":
            raise FormulationError(f"unknown variable kind {kind!r}")
        if lower > upper:
            raise FormulationError(f"variable {name!r}: lower {lower} > upper {upper}")
        j = len(self.variables)
        self.variables.append(Variable(name, kind, float(lower), float(upper), int(priority)))
        self.var_index[name] = j
        return j

    def add_constraint(self, name: str, terms: Terms, sense: str, rhs: float) -> int:
        if name in self.con_index:
            raise FormulationError(f"duplicate constraint name {name!r}")
        if sense not in SENSES:
            raise FormulationError(f"unknown sense {sense!r}")
        merged: dict = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        n = len(self.variables)
        for j, a in items:
            if not 0 <= j < n:
                raise FormulationError(f"constraint {name!r} references column {j}")
            merged[j] = merged.get(j, 0.0) + float(a)
        merged = {j: a for j, a in merged.items() if a != 0.0}
        i = len(self.constraints)
        self.constraints.append(Constraint(name, merged, sense, float(rhs)))
        self.con_index[name] = i
        return i

    def add_objective(self, col: int, coef: float) -> None:
        self.objective[col] = self.objective.get(col, 0.0) + float(coef)

    def col(self, name: str) -> int:
        return self.var_index[name]

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_cons(self) -> int:
        return len(self.constraints)

    def binaries(self) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.kind == "binary"]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([v.lower for v in self.variables], dtype=float)
        hi = np.array([v.upper for v in self.variables], dtype=float)
        return lo, hi

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for j, a in self.objective.items():
            c[j] += a
        return c

    def matrix(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for i, con in enumerate(self.constraints):
            for j, a in con.terms.items():
                rows.append(i)
                cols.append(j)
                vals.append(a)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n_cons, self.n_vars))

    def row_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.full(self.n_cons, -INF)
        hi = np.full(self.n_cons, INF)
        for i, con in enumerate(self.constraints):
            if con.sense in ("=", ">="):
                lo[i] = con.rhs
            if con.sense in ("=", "<="):
                hi[i] = con.rhs
        return lo, hi

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.cost_vector() @ x + self.objective_constant)

    def violations(self, x) -> np.ndarray:
        """Per-row constraint violation (0 where satisfied)."""
        act = self.matrix() @ np.asarray(x, dtype=float)
        lo, hi = self.row_bounds()
        return np.maximum(0.0, np.maximum(lo - act, act - hi))

    def check(self) -> list[str]:
        """Structural problems: bad bounds, dangling references, duplicate names."""
        out = []
        if len(self.var_index) != self.n_vars:
            out.append("variable names not unique")
        if len(self.con_index) != self.n_cons:
            out.append("constraint names not unique")
        for v in self.variables:
            if v.lower > v.upper:
                out.append(f"variable {v.name}: lower > upper")
        for con in self.constraints:
            for j in con.terms:
                if not 0 <= j < self.n_vars:
                    out.append(f"constraint {con.name}: dangling column {j}")
        for j in self.objective:
            if not 0 <= j < self.n_vars:
                out.append(f"objective: dangling column {j}")
        return out

    def copy(self) -> "MilpModel":
        m = MilpModel(self.name)
        m.variables = [Variable(v.name, v.kind, v.lower, v.upper, v.priority)
                       for v in self.variables]
        m.constraints = [Constraint(c.name, dict(c.terms), c.sense, c.rhs)
                         for c in self.constraints]
        m.objective = dict(self.objective)
        m.objective_constant = self.objective_constant
        m.var_index = dict(self.var_index)
        m.con_index = dict(self.con_index)
        return m
