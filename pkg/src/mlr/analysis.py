"""Empirical probes for backward-looking programs.

How far into the future must evaluation look before the value at a given
cycle settles?  These probes answer that question by rerunning the
synchronous evaluator at growing horizons and watching the probed cycle:
the lookahead offset z(m) is the first horizon extension at which every
variable at cycle m is decided and no longer moves.  A program whose
offsets stay bounded over the probed range earns an empirical window
bound; one whose offset chases the cap is reported as divergent.

Everything here is observational.  A bound read off finitely many probes
is evidence, not proof, and every report says so.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .domain import BOT, TAG_ERR
from .normalize import Normalized
from .sync import eval_sync
from .trace import Trace


class SynchronizationError(Exception):
    """A probe ran the evaluator into a synchronization error."""

    def __init__(self, cycle: int, var: str):
        super().__init__("synchronization error at %s, cycle %d"
                         % (var, cycle))
        self.cycle = cycle
        self.var = var


@dataclass
class CausalityReport:
    """Lookahead offsets over a range of probed cycles."""
    offsets: Dict[int, Optional[int]] = field(default_factory=dict)
    zbar: Optional[int] = None
    diverged: bool = False
    witness: Optional[int] = None
    cap: int = 0

    def to_table(self) -> str:
        lines = ["cycle  lookahead"]
        for m in sorted(self.offsets):
            z = self.offsets[m]
            lines.append("%5d  %s" % (m, "diverged" if z is None else z))
        if self.diverged:
            lines.append("verdict: diverged at cycle %d (offset exceeds "
                         "cap %d)" % (self.witness, self.cap))
        else:
            lines.append("verdict: empirical window bound %d "
                         "(max over %d probes; bound not proven)"
                         % (self.zbar, len(self.offsets)))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["cycle", "lookahead", "diverged"])
        for m in sorted(self.offsets):
            z = self.offsets[m]
            w.writerow([m, "" if z is None else z, z is None])
        return buf.getvalue()


def _cells_at(node: Normalized, inputs: Trace, m: int, horizon: int,
              zmax: int) -> Dict[str, object]:
    """Every variable's cell at cycle m when evaluating cells 0..horizon."""
    tr = eval_sync(node, inputs, m + 1, h=horizon + 1, zmax=zmax)
    out = {}
    for v in tr.vars:
        for n in range(m + 1):
            if tr.cell(v, n).tag == TAG_ERR:
                raise SynchronizationError(n, v)
        out[v] = tr.cell(v, m)
    return out


def measure_lookahead(node: Normalized, inputs: Trace, m: int, cap: int,
                      stable_steps: int = 1,
                      zmax: int = 4096) -> Optional[int]:
    """Smallest z <= cap settling every variable at cycle m, else None.

    Settled means: evaluating cells 0..m+z leaves no variable at cycle m
    undecided, and extending the horizon by one more cycle (stable_steps
    times) changes nothing there.
    """
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    prev = None
    for z in range(cap + stable_steps + 1):
        cur = _cells_at(node, inputs, m, m + z, zmax)
        if prev is not None and all(cur[v] == prev[1][v] for v in cur):
            streak = prev[2] + 1
        else:
            streak = 0
        prev = (z, cur, streak)
        if streak >= stable_steps and not any(
                c is BOT for c in cur.values()):
            candidate = z - streak
            if candidate <= cap:
                return candidate
            return None
    return None


def probe_bounded_reactivity(node: Normalized, inputs: Trace, M: int,
                             cap: int,
                             stable_steps: int = 1) -> CausalityReport:
    """Lookahead offsets for every cycle m < M; empirical bound or not."""
    report = CausalityReport(cap=cap)
    for m in range(M):
        z = measure_lookahead(node, inputs, m, cap,
                              stable_steps=stable_steps)
        report.offsets[m] = z
        if z is None and not report.diverged:
            report.diverged = True
            report.witness = m
    if not report.diverged and report.offsets:
        report.zbar = max(report.offsets.values())
    return report


def max_live_window(stats) -> int:
    """High-water mark of simultaneously retained cycles in an op run."""
    if hasattr(stats, "max_window"):
        return stats.max_window
    return stats.stats.max_window


def truncate_inputs(inputs: Trace, keep: int) -> Trace:
    """Keep cells 0..keep-1 of every column; later cells become unknown."""
    cols = {v: [c if n < keep else BOT
                for n, c in enumerate(inputs.columns[v])]
            for v in inputs.vars}
    return Trace(list(inputs.vars), cols)


def eventual_progress_holds(node: Normalized, inputs: Trace, m: int,
                            cap: int) -> bool:
    """Input truncation test: once cycle m settles at lookahead z, inputs
    beyond m+z are irrelevant to the prefix 0..m."""
    z = measure_lookahead(node, inputs, m, cap)
    if z is None:
        return False
    full = eval_sync(node, inputs, m + 1, h=m + z + 1)
    cut = eval_sync(node, truncate_inputs(inputs, m + z + 1), m + 1,
                    h=m + z + 1)
    return all(full.cell(v, n) == cut.cell(v, n)
               for v in full.vars for n in range(m + 1))


def horizon_chain_stable(node: Normalized, inputs: Trace, m: int,
                         depth: int) -> bool:
    """Known cells at <= m never change as the horizon rises."""
    seen: Dict[tuple, object] = {}
    for z in range(depth + 1):
        tr = eval_sync(node, inputs, m + 1, h=m + z + 1)
        for v in tr.vars:
            for n in range(m + 1):
                cell = tr.cell(v, n)
                if cell is BOT:
                    continue
                key = (v, n)
                if key in seen and seen[key] != cell:
                    return False
                seen[key] = cell
    return True
