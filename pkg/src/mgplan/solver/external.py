"""Hand-off to an external MILP solver through MPS files.

The command is a template with ``{mps}`` and ``{sol}`` placeholders, e.g.
``cbc {mps} solve solu {sol}``. Two solution layouts are understood:

* plain ``name value`` lines, optionally preceded by ``status <word>`` and
  ``objective <number>`` lines;
* CBC listings: a header such as ``Optimal - objective value 12.5`` followed
  by ``index name value [reduced cost]`` rows.

Columns missing from the file are taken as zero. The parsed point is checked
against the model before it is accepted, so a broken solver cannot hand back
a silently infeasible plan.
"""

from __future__ import annotations

import math
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import InfeasibleIncumbent, MgplanError, ParseError
from ..model import MilpModel
from ..mps import export_mps
from .bnb import BnbResult, check_incumbent
from .simplex import LpProblem, LpSolution

_STATUS_WORDS = {
    "optimal": "optimal",
    "infeasible": "infeasible",
    "unbounded": "unbounded",
    "stopped": "gap_limit",
    "time": "gap_limit",
    "gap": "gap_limit",
    "node": "node_limit",
}


@dataclass
class SolutionFile:
    status: Optional[str]
    objective: Optional[float]
    values: dict


def _status_word(text: str) -> Optional[str]:
    low = text.lower()
    for word, status in _STATUS_WORDS.items():
        if word in low:
            return status
    return None


def parse_solution(text: str, names, source=None) -> SolutionFile:
    """Read a solution listing; ``names`` is the set of known column names."""
    names = set(names)
    status = objective = None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tok = raw.split()
        if not tok or tok[0].startswith("#"):
            continue
        head = tok[0].lower()
        if head == "status" and len(tok) > 1:
            status = _status_word(" ".join(tok[1:])) or status
            continue
        if head == "objective" and len(tok) > 1:
            objective = _parse_float(tok[-1], lineno, source)
            continue
        if len(tok) >= 3 and tok[1] in names and tok[0].isdigit():
            values[tok[1]] = _parse_float(tok[2], lineno, source)
        elif len(tok) >= 2 and tok[0] in names:
            values[tok[0]] = _parse_float(tok[1], lineno, source)
        elif status is None and not values:
            # free-text header line, e.g. "Optimal - objective value 12.5"
            status = _status_word(raw)
            if "objective" in raw.lower():
                try:
                    objective = float(tok[-1])
                except ValueError:
                    pass
        else:
            raise ParseError(f"unrecognised solution line {raw.strip()!r}", row=lineno,
                             source=source)
    return SolutionFile(status, objective, values)


def _parse_float(tok: str, lineno: int, source) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"bad number {tok!r}", row=lineno, source=source) from None


@dataclass
class ExternalSolver:
    command: str
    timeout: Optional[float] = None
    keep_files: bool = False

    def solve(self, model: MilpModel, workdir=None) -> BnbResult:
        """Write ``model`` as MPS, run the command and read its solution back."""
        if "{mps}" not in self.command or "{sol}" not in self.command:
            raise MgplanError("external solver command needs {mps} and {sol} placeholders")
        t0 = time.perf_counter()
        tmp = None
        if workdir is None:
            tmp = tempfile.TemporaryDirectory(prefix="mgplan-")
            workdir = tmp.name
        try:
            work = Path(workdir)
            mps_path = work / "model.mps"
            sol_path = work / "model.sol"
            export_mps(model, mps_path)
            argv = [part.format(mps=mps_path, sol=sol_path)
                    for part in shlex.split(self.command)]
            try:
                proc = subprocess.run(argv, capture_output=True, text=True,
                                      timeout=self.timeout)
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise MgplanError(f"external solver failed to run: {exc}") from exc
            if proc.returncode != 0:
                raise MgplanError(f"external solver exited with {proc.returncode}: "
                                  f"{proc.stderr.strip()[:500]}")
            if not sol_path.exists():
                raise MgplanError("external solver wrote no solution file")
            sol = parse_solution(sol_path.read_text(encoding="utf-8"),
                                 model.var_index, source=sol_path)
        finally:
            if tmp is not None and not self.keep_files:
                tmp.cleanup()
        return _to_result(model, sol, time.perf_counter() - t0)


def _to_result(model: MilpModel, sol: SolutionFile, wall: float) -> BnbResult:
    status = sol.status or ("optimal" if sol.values else "infeasible")
    if status in ("infeasible", "unbounded"):
        bound = math.inf if status == "infeasible" else -math.inf
        return BnbResult(status, None, bound, 0, wall_time=wall)
    x = np.zeros(model.n_vars)
    for name, v in sol.values.items():
        x[model.var_index[name]] = v
    prob = LpProblem.from_model(model)
    try:
        obj = check_incumbent(prob, x, feas_tol=1e-6)
    except InfeasibleIncumbent as exc:
        raise MgplanError(f"external solution rejected: {exc}") from exc
    bound = obj if status == "optimal" else -math.inf
    inc = LpSolution("optimal", obj, x, 0)
    return BnbResult(status, inc, bound, 0, wall_time=wall)
