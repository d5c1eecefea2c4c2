"""Finite chronograms: CSV serialization, diffing, pretty-printing,
and input-trace loading with per-column typing.

The CSV form has a `cycle` column followed by one column per variable;
cells use the chronogram symbols (`.` bottom, `?` pending, `_` absent,
`!` error) or a payload literal.  Floats carry 17 significant digits
and always a decimal marker, so reading a written trace reproduces the
payloads bit for bit.
"""

import csv
import io
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .domain import (ABSENT, BOT, ERR, PENDING, ExtVal, known, parse_cell,
                     render_cell)
from .types import DataType


class TraceError(Exception):
    """A malformed trace or input file."""


@dataclass
class Trace:
    vars: List[str]
    columns: Dict[str, List[ExtVal]]

    def __post_init__(self):
        lengths = {len(self.columns[v]) for v in self.vars}
        if len(lengths) > 1:
            raise TraceError("ragged trace: column lengths %s" %
                             sorted(lengths))

    @property
    def length(self) -> int:
        return len(self.columns[self.vars[0]]) if self.vars else 0

    def cell(self, var: str, cycle: int) -> ExtVal:
        return self.columns[var][cycle]

    def restrict(self, names: List[str]) -> "Trace":
        return Trace(list(names), {v: self.columns[v] for v in names})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cycle"] + self.vars)
        for i in range(self.length):
            w.writerow([i] + [render_cell(self.columns[v][i])
                              for v in self.vars])
        return buf.getvalue()

    @staticmethod
    def from_csv(text: str) -> "Trace":
        rows = [r for r in csv.reader(io.StringIO(text)) if r]
        if not rows or not rows[0] or rows[0][0] != "cycle":
            raise TraceError("first column must be 'cycle'")
        names = rows[0][1:]
        cols: Dict[str, List[ExtVal]] = {v: [] for v in names}
        for i, row in enumerate(rows[1:]):
            if len(row) != len(names) + 1:
                raise TraceError("row %d has %d cells, expected %d"
                                 % (i, len(row) - 1, len(names)))
            if row[0].strip() != str(i):
                raise TraceError("row %d is labeled cycle %r; cycles must "
                                 "be consecutive from 0" % (i, row[0]))
            for v, cell in zip(names, row[1:]):
                try:
                    cols[v].append(parse_cell(cell))
                except ValueError:
                    raise TraceError("cycle %d, %s: bad cell %r"
                                     % (i, v, cell))
        return Trace(names, cols)

    def pretty(self) -> str:
        n = self.length
        header = ["cycle"] + [str(i) for i in range(n)]
        rows = [[v] + [render_cell(self.columns[v][i]) for i in range(n)]
                for v in self.vars]
        widths = [max(len(r[c]) for r in [header] + rows)
                  for c in range(n + 1)]
        lines = []
        for r in [header] + rows:
            cells = [r[0].ljust(widths[0])] + \
                [r[c].rjust(widths[c]) for c in range(1, n + 1)]
            lines.append((cells[0] + " | " + " ".join(cells[1:])).rstrip())
        return "\n".join(lines) + "\n"


def _payload_close(x, y, tol: float) -> bool:
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        if not (isinstance(x, np.ndarray) and isinstance(y, np.ndarray)):
            return False
        if x.shape != y.shape or x.dtype.kind != y.dtype.kind:
            return False
        if x.dtype.kind == "f" and tol > 0:
            return bool(np.allclose(x, y, rtol=0.0, atol=tol, equal_nan=True))
        return bool(np.array_equal(x, y)) or (
            x.dtype.kind == "f" and
            bool(np.array_equal(np.isnan(x), np.isnan(y))) and
            bool(np.array_equal(x[~np.isnan(x)], y[~np.isnan(y)])))
    if isinstance(x, bool) != isinstance(y, bool):
        return False
    if isinstance(x, float) and isinstance(y, float):
        if np.isnan(x) and np.isnan(y):
            return True
        if tol > 0 and np.isfinite(x) and np.isfinite(y):
            return abs(x - y) <= tol
        return x == y
    return type(x) is type(y) and x == y


def diff_traces(a: Trace, b: Trace, tol: float = 0.0) -> List[str]:
    """Human-readable mismatches; empty means the traces agree.

    With tol > 0, Known float payloads (scalars and tensors) may differ
    by at most tol elementwise; everything else compares exactly.
    """
    out = []
    for v in a.vars:
        if v not in b.columns:
            out.append("variable %r missing from second trace" % v)
    for v in b.vars:
        if v not in a.columns:
            out.append("variable %r missing from first trace" % v)
    if a.length != b.length:
        out.append("lengths differ: %d vs %d" % (a.length, b.length))
    shared = [v for v in a.vars if v in b.columns]
    for i in range(min(a.length, b.length)):
        for v in shared:
            x, y = a.columns[v][i], b.columns[v][i]
            if x.is_known and y.is_known:
                if not _payload_close(x.value, y.value, tol):
                    out.append("cycle %d, %s: %s != %s"
                               % (i, v, render_cell(x), render_cell(y)))
            elif x != y:
                out.append("cycle %d, %s: %s != %s"
                           % (i, v, render_cell(x), render_cell(y)))
    return out


# ---- input traces ----

_INPUT_KINDS = {"true": "bool", "false": "bool"}


def _infer_cell_type(cell: str) -> DataType:
    if cell in _INPUT_KINDS:
        return DataType("bool", ())
    if cell.startswith("t["):
        v = parse_cell(cell).value
        kind = {"b": "bool", "i": "int", "f": "num"}[v.dtype.kind]
        return DataType(kind, v.shape)
    try:
        int(cell)
        return DataType("int", ())
    except ValueError:
        pass
    try:
        float(cell)
        return DataType("num", ())
    except ValueError:
        raise TraceError("cannot infer a type from input cell %r" % cell)


def _coerce(cell: str, dt: DataType, where: str):
    if dt.shape != ():
        v = parse_cell(cell).value
        if not isinstance(v, np.ndarray):
            raise TraceError("%s: expected a %s tensor, got %r"
                             % (where, dt, cell))
        if v.shape != dt.shape:
            raise TraceError("%s: shape %s does not match %s"
                             % (where, v.shape, dt))
        return v.astype({"bool": bool, "int": np.int64,
                         "num": np.float64}[dt.kind])
    if dt.kind == "bool":
        if cell not in ("true", "false"):
            raise TraceError("%s: expected true/false, got %r" % (where, cell))
        return cell == "true"
    if dt.kind == "int":
        try:
            return int(cell)
        except ValueError:
            raise TraceError("%s: expected an int, got %r" % (where, cell))
    try:
        return float(cell)
    except ValueError:
        raise TraceError("%s: expected a number, got %r" % (where, cell))


def read_inputs(text: str, declared: Optional[Dict[str, DataType]] = None
                ) -> Tuple[Trace, Dict[str, DataType]]:
    """Load an input trace, typing each column.

    Annotated columns (present in `declared`) parse strictly against
    their type; the rest take the type of their first present cell.
    Cells are values, `_` (absent) or `.` (never arrives).  Returns the
    trace and the full column typing.
    """
    declared = dict(declared or {})
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows or not rows[0] or rows[0][0] != "cycle":
        raise TraceError("first column must be 'cycle'")
    names = rows[0][1:]
    if len(set(names)) != len(names):
        raise TraceError("duplicate input column")
    body = [r[1:] for r in rows[1:]]
    for i, row in enumerate(rows[1:]):
        if len(row) != len(names) + 1:
            raise TraceError("row %d has %d cells, expected %d"
                             % (i, len(row) - 1, len(names)))
        if row[0].strip() != str(i):
            raise TraceError("row %d is labeled cycle %r; cycles must be "
                             "consecutive from 0" % (i, row[0]))

    types: Dict[str, DataType] = {}
    for j, v in enumerate(names):
        if v in declared:
            types[v] = declared[v]
            continue
        first = next((r[j].strip() for r in body
                      if r[j].strip() not in ("_", ".")), None)
        if first is None:
            raise TraceError("column %r has no value to infer a type from; "
                             "annotate the input" % v)
        types[v] = _infer_cell_type(first)

    cols: Dict[str, List[ExtVal]] = {v: [] for v in names}
    for i, r in enumerate(body):
        for j, v in enumerate(names):
            cell = r[j].strip()
            if cell == "_":
                cols[v].append(ABSENT)
            elif cell == ".":
                cols[v].append(BOT)
            elif cell in ("?", "!"):
                raise TraceError("cycle %d, %s: input cells must be values, "
                                 "_ or ." % (i, v))
            else:
                cols[v].append(known(_coerce(cell, types[v],
                                             "cycle %d, %s" % (i, v))))
    return Trace(names, cols), types
