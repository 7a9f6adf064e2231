"""MPS export/import and a CPLEX-LP style text dump.

The writer lays entries out in the fixed-format columns (fields at 2, 5, 15,
25, 40, 50). Names longer than 8 characters or numbers longer than 12 spill
past their field, so the reader tokenizes on whitespace instead of slicing
columns; names therefore must not contain spaces. Binary columns sit between
INTORG/INTEND markers and always carry an explicit UP bound of 1.
"""

from __future__ import annotations

import math
from pathlib import Path

from .errors import FormulationError, MgplanError, ParseError
from .model import INF, MilpModel

SENSE_CODE = {"<=": "L", ">=": "G", "=": "E"}
CODE_SENSE = {v: k for k, v in SENSE_CODE.items()}


def _num(v: float) -> str:
    v = float(v)
    if math.isfinite(v) and v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _entry(name: str, row: str, value: float) -> str:
    return f"    {name:<8}  {row:<8}  {_num(value):>12}"


def _objective_name(model: MilpModel) -> str:
    name = "COST"
    while name in model.con_index:
        name += "_"
    return name


def _check_names(model: MilpModel):
    for v in model.variables:
        if not v.name or any(ch.isspace() for ch in v.name):
            raise FormulationError(f"variable name {v.name!r} unusable in MPS")
    for c in model.constraints:
        if not c.name or any(ch.isspace() for ch in c.name):
            raise FormulationError(f"constraint name {c.name!r} unusable in MPS")


def mps_text(model: MilpModel) -> str:
    if model.n_vars == 0:
        raise FormulationError("cannot export an empty model")
    _check_names(model)
    obj = _objective_name(model)
    out = [f"NAME          {model.name}", "ROWS", f" N  {obj}"]
    for c in model.constraints:
        out.append(f" {SENSE_CODE[c.sense]}  {c.name}")

    per_col = [[] for _ in range(model.n_vars)]
    for c in model.constraints:
        for j, a in c.terms.items():
            per_col[j].append((c.name, a))

    out.append("COLUMNS")
    in_marker = False
    marker = 0
    for j, v in enumerate(model.variables):
        is_int = v.kind == "binary"
        if is_int and not in_marker:
            out.append(f"    M{marker:07d}  'MARKER'                 'INTORG'")
            marker += 1
            in_marker = True
        elif not is_int and in_marker:
            out.append(f"    M{marker:07d}  'MARKER'                 'INTEND'")
            marker += 1
            in_marker = False
        entries = []
        coef = model.objective.get(j, 0.0)
        if coef != 0.0:
            entries.append((obj, coef))
        entries += per_col[j]
        if not entries:
            entries = [(obj, 0.0)]
        for row, a in entries:
            out.append(_entry(v.name, row, a))
    if in_marker:
        out.append(f"    M{marker:07d}  'MARKER'                 'INTEND'")

    out.append("RHS")
    if model.objective_constant != 0.0:
        out.append(_entry("RHS", obj, -model.objective_constant))
    for c in model.constraints:
        if c.rhs != 0.0:
            out.append(_entry("RHS", c.name, c.rhs))

    out.append("BOUNDS")
    for v in model.variables:
        lo, hi = v.lower, v.upper
        if lo == hi:
            out.append(f" FX BND       {v.name:<8}  {_num(lo):>12}")
            continue
        if lo == -INF and hi == INF:
            out.append(f" FR BND       {v.name}")
            continue
        if lo == -INF:
            out.append(f" MI BND       {v.name}")
        elif lo != 0.0:
            out.append(f" LO BND       {v.name:<8}  {_num(lo):>12}")
        if hi != INF:
            out.append(f" UP BND       {v.name:<8}  {_num(hi):>12}")
        elif v.kind == "binary":
            out.append(f" PL BND       {v.name}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export_mps(model: MilpModel, path) -> None:
    text = mps_text(model)
    try:
        Path(path).write_text(text, encoding="ascii")
    except OSError as exc:
        raise MgplanError(f"cannot write {path}: {exc}") from exc


def _float(tok: str, lineno: int, section: str, source) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(f"bad number {tok!r}", row=lineno, source=source,
                         section=section) from None


def parse_mps(text: str, source=None) -> MilpModel:
    model = MilpModel()
    section = None
    obj_row = None
    row_sense: dict = {}
    row_order: list = []
    rows_terms: dict = {}
    rhs: dict = {}
    ranges: dict = {}
    objective: dict = {}
    constant = 0.0
    integer_mode = False
    maximize = False
    bounds_seen: set = set()

    def fail(msg, lineno):
        raise ParseError(msg, row=lineno, source=source, section=section)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0].upper()
            if section == "NAME":
                model.name = head[1] if len(head) > 1 else "model"
            elif section == "OBJSENSE" and len(head) > 1:
                maximize = head[1].upper() in ("MAX", "MAXIMIZE")
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "OBJSENSE"):
                fail(f"unknown section {section}", lineno)
            continue
        tok = raw.split()
        if section == "OBJSENSE":
            maximize = tok[0].upper() in ("MAX", "MAXIMIZE")
        elif section == "ROWS":
            if len(tok) != 2:
                fail("expected '<type> <name>'", lineno)
            code, name = tok[0].upper(), tok[1]
            if code == "N":
                if obj_row is None:
                    obj_row = name
                continue
            if code not in CODE_SENSE:
                fail(f"unknown row type {code}", lineno)
            if name in row_sense:
                fail(f"duplicate row {name}", lineno)
            row_sense[name] = CODE_SENSE[code]
            row_order.append(name)
            rows_terms[name] = {}
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                if tok[2] == "'INTORG'":
                    integer_mode = True
                elif tok[2] == "'INTEND'":
                    integer_mode = False
                else:
                    fail(f"unknown marker {tok[2]}", lineno)
                continue
            if len(tok) not in (3, 5):
                fail("expected column entries in pairs", lineno)
            col = tok[0]
            if col not in model.var_index:
                if integer_mode:
                    model.add_var(col, 0.0, 1.0, "binary")
                else:
                    model.add_var(col, 0.0, INF)
            j = model.var_index[col]
            for row, val in zip(tok[1::2], tok[2::2]):
                a = _float(val, lineno, section, source)
                if row == obj_row:
                    objective[j] = objective.get(j, 0.0) + a
                elif row in rows_terms:
                    rows_terms[row][j] = rows_terms[row].get(j, 0.0) + a
                else:
                    fail(f"unknown row {row}", lineno)
        elif section in ("RHS", "RANGES"):
            pairs = tok[1:] if len(tok) % 2 == 1 else tok
            if len(pairs) % 2:
                fail("expected row/value pairs", lineno)
            for row, val in zip(pairs[0::2], pairs[1::2]):
                a = _float(val, lineno, section, source)
                if section == "RHS":
                    if row == obj_row:
                        constant = -a
                    elif row in row_sense:
                        rhs[row] = a
                    else:
                        fail(f"unknown row {row}", lineno)
                else:
                    if row not in row_sense:
                        fail(f"unknown row {row}", lineno)
                    ranges[row] = a
        elif section == "BOUNDS":
            if len(tok) < 3:
                fail("malformed bound", lineno)
            kind = tok[0].upper()
            col = tok[2]
            if col not in model.var_index:
                fail(f"bound on unknown column {col}", lineno)
            v = model.variables[model.var_index[col]]
            needs_value = kind in ("UP", "LO", "FX", "LI", "UI")
            if needs_value and len(tok) < 4:
                fail(f"{kind} bound needs a value", lineno)
            val = _float(tok[3], lineno, section, source) if needs_value else None
            if kind in ("UP", "UI"):
                v.upper = val
                if val < 0 and v.lower == 0.0 and col not in bounds_seen:
                    v.lower = -INF
            elif kind in ("LO", "LI"):
                v.lower = val
            elif kind == "FX":
                v.lower = v.upper = val
            elif kind == "FR":
                v.lower, v.upper = -INF, INF
            elif kind == "MI":
                v.lower = -INF
            elif kind == "PL":
                v.upper = INF
            elif kind == "BV":
                v.kind, v.lower, v.upper = "binary", 0.0, 1.0
            else:
                fail(f"unsupported bound type {kind}", lineno)
            bounds_seen.add(col)
        else:
            fail("data line outside a section", lineno)

    for v in model.variables:
        if v.lower > v.upper:
            raise ParseError(f"column {v.name}: lower > upper", source=source, section="BOUNDS")
    for j, a in objective.items():
        model.add_objective(j, -a if maximize else a)
    model.objective_constant = -constant if maximize else constant
    for name in row_order:
        sense = row_sense[name]
        b = rhs.get(name, 0.0)
        model.add_constraint(name, rows_terms[name], sense, b)
        if name in ranges:
            r = ranges[name]
            if sense == "<=":
                model.add_constraint(name + "_rng", rows_terms[name], ">=", b - abs(r))
            elif sense == ">=":
                model.add_constraint(name + "_rng", rows_terms[name], "<=", b + abs(r))
            else:
                other = b + r
                c = model.constraints[model.con_index[name]]
                c.sense, c.rhs = (">=", min(b, other))
                model.add_constraint(name + "_rng", rows_terms[name], "<=", max(b, other))
    return model


def import_mps(path) -> MilpModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read: {exc}", source=path) from exc
    return parse_mps(text, source=path)


def lp_text(model: MilpModel) -> str:
    """CPLEX-LP style rendering, for reading rather than round-tripping."""

    def expr(terms):
        parts = []
        for j, a in terms.items():
            name = model.variables[j].name
            sign = "-" if a < 0 else "+"
            parts.append(f"{sign} {_num(abs(a))} {name}")
        s = " ".join(parts) if parts else "0"
        return s[2:] if s.startswith("+ ") else s

    out = ["\\ " + model.name, "Minimize", " obj: " + expr(model.objective)
           + (f" + {_num(model.objective_constant)}" if model.objective_constant else ""),
           "Subject To"]
    for c in model.constraints:
        out.append(f" {c.name}: {expr(c.terms)} {c.sense} {_num(c.rhs)}")
    out.append("Bounds")
    for v in model.variables:
        if v.lower == -INF and v.upper == INF:
            out.append(f" {v.name} free")
        else:
            lo = "-inf" if v.lower == -INF else _num(v.lower)
            hi = "+inf" if v.upper == INF else _num(v.upper)
            out.append(f" {lo} <= {v.name} <= {hi}")
    bins = [v.name for v in model.variables if v.kind == "binary"]
    if bins:
        out.append("Binary")
        out.extend(" " + b for b in bins)
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp(model: MilpModel, path) -> None:
    Path(path).write_text(lp_text(model), encoding="utf-8")
