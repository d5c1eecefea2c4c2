"""Synchronous denotational semantics over extended-value streams.

Every variable denotes a stream of ExtVal cells indexed by cycle.  Streams
are conceptually infinite; the evaluator materializes a finite window and
any read past it returns Bot.  Each primitive is a monotone transformer on
cell prefixes, and evaluation drives the whole equation system to its least
fixed point by chaotic iteration: cycles are swept lowest-first, the sweep
direction alternates so backward recurrences settle, and iteration stops on
the first sweep that changes nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .ast import (Call, Const, Equation, Fby, If, Index, Merge, Post,
                  TensorLit, Var, When)
from .builtins import EvalError, apply_op
from .domain import ABSENT, BOT, ERR, ExtVal, join, known
from .normalize import Normalized
from .trace import Trace


class ConstStream:
    """A constant stream: one Known cell repeated over a finite window."""

    __slots__ = ("cell", "width")

    def __init__(self, value, width: int):
        self.cell = known(value)
        self.width = width

    def __len__(self) -> int:
        return self.width


def _at(s, n: int) -> ExtVal:
    """Cell n of stream s, Bot outside the materialized window."""
    if n < 0 or n >= len(s):
        return BOT
    if type(s) is ConstStream:
        return s.cell
    return s[n]


# ---- stream transformers ----

def sf_apply_step(f: str, args: Sequence, n: int, k: Optional[int] = None) -> ExtVal:
    """Pointwise application of builtin f to the argument cells at cycle n.

    All arguments must agree on presence: mixing present and absent cells
    is a synchrony error.  A nullary application is always present.
    """
    vals = []
    n_known = 0
    n_absent = 0
    for a in args:
        v = _at(a, n)
        if v is ERR:
            return ERR
        if v is ABSENT:
            n_absent += 1
        elif v.is_known:
            n_known += 1
        vals.append(v)
    if n_absent:
        if n_known:
            return ERR
        if n_absent == len(args):
            return ABSENT
        return BOT
    if n_known == len(args):
        try:
            return known(apply_op(f, [v.value for v in vals], k=k))
        except EvalError:
            return ERR
    return BOT


def sf_fby_step(i, s, n: int, back: bool = False, end: Optional[int] = None,
                inits: bool = True) -> ExtVal:
    """Initialized delay: the previous present value of s, or i at start.

    Forward, the start is cycle 0; backward (back=True) the recurrence runs
    toward lower indices and the start is the end of a closed window.  The
    output presence follows i, so a cell is absent exactly when i is.  With
    inits=False the start cycle stays Bot instead of firing i (used by the
    encoding of post, which has no initializer).
    """
    iv = _at(i, n)
    if iv is ERR:
        return ERR
    if back:
        stop = end if end is not None else len(s)
        scan = range(n + 1, stop)
        edge_unknown = end is None
    else:
        scan = range(n - 1, -1, -1)
        edge_unknown = False
    for m in scan:
        sm = _at(s, m)
        if sm is ABSENT:
            continue
        if sm is ERR:
            return ERR
        if sm is BOT:
            return BOT
        # nearest present cell of s found: steady state, gated by i
        if iv is ABSENT:
            return ABSENT
        if iv is BOT:
            return BOT
        return sm
    if edge_unknown:
        # open window: the recurrence side extends past what we can see
        return BOT
    # no present cell on the recurrence side: this is the start cycle
    sv = _at(s, n)
    if sv is ERR:
        return ERR
    if iv is ABSENT:
        if sv is ABSENT:
            return ABSENT
        return ERR if sv.is_known else BOT
    if sv is ABSENT:
        return ERR if iv.is_known else BOT
    if not inits:
        return BOT
    return iv


def sf_post_step(s, n: int, h: Optional[int] = None) -> ExtVal:
    """Backward shift: cell n takes cell n+1 of s, cut off at horizon h."""
    if h is not None and n >= h:
        return BOT
    return _at(s, n + 1)


def sf_when_step(s, b, n: int) -> ExtVal:
    """Sampling: s where b is true, absent where b is false or absent.

    s and b must be present in the same cycles; a present cell on one side
    against an absent cell on the other is a synchrony error.
    """
    sv = _at(s, n)
    bv = _at(b, n)
    if sv is ERR or bv is ERR:
        return ERR
    if bv is BOT:
        return ABSENT if sv is ABSENT else BOT
    if bv is ABSENT:
        return ERR if sv.is_known else ABSENT
    if sv is ABSENT:
        return ERR
    if bv.value:
        return sv
    return ABSENT


def sf_merge_step(b, t, f, n: int) -> ExtVal:
    """Multiplexing: t where b is true, f where b is false.

    The selected arm must be present and the other absent; when b is absent
    both arms must be absent.
    """
    bv = _at(b, n)
    tv = _at(t, n)
    fv = _at(f, n)
    if bv is ERR or tv is ERR or fv is ERR:
        return ERR
    if bv is BOT:
        return BOT
    if bv is ABSENT:
        if tv.is_known or fv.is_known:
            return ERR
        return ABSENT
    sel, other = (tv, fv) if bv.value else (fv, tv)
    if other.is_known or sel is ABSENT:
        return ERR
    return sel


# ---- fixed-point evaluation ----

@dataclass
class ErrSite:
    """Location and cause of the first error cell produced."""

    cycle: int
    var: str
    prior: ExtVal
    emitted: ExtVal
    reason: str


@dataclass
class SyncResult:
    trace: Trace
    err: Optional[ErrSite]
    undecided: List[Tuple[str, int]]
    sweeps: int
    store: Dict[str, List[ExtVal]] = field(repr=False, default_factory=dict)


class SyncEngine:
    """Chaotic iteration of one normalized node to its least fixed point."""

    def __init__(self, node: Normalized, inputs: Trace, cycles: int,
                 h: Optional[int] = None, end: Optional[int] = None,
                 zmax: int = 1024):
        if cycles < 0:
            raise ValueError("cycles must be nonnegative")
        self.node = node
        self.cycles = cycles
        self.end = end
        if end is not None:
            width = max(end, cycles)
        else:
            width = cycles + zmax
        if h is not None:
            width = min(width, max(h, cycles))
        self.h = h
        self.width = width
        self.err: Optional[ErrSite] = None
        self.store: Dict[str, List[ExtVal]] = {}
        order: List[str] = []
        for name in node.input_names():
            self._add_var(name, order)
        for eq in node.eqs:
            for lhs in eq.lhs:
                self._add_var(lhs, order)
        self.var_order = order
        self._seed_inputs(inputs)
        self.eqs = [self._compile(eq) for eq in node.eqs]

    def _add_var(self, name: str, order: List[str]):
        if name not in self.store:
            self.store[name] = [BOT] * self.width
            order.append(name)

    def _seed_inputs(self, inputs: Trace):
        for name in self.node.input_names():
            if name not in inputs.columns:
                raise ValueError("missing input stream: %s" % name)
            col = inputs.columns[name]
            cells = self.store[name]
            for n in range(min(len(col), self.width)):
                cells[n] = col[n]

    def _stream(self, e):
        if isinstance(e, Var):
            if e.name not in self.store:
                self._add_var(e.name, self.var_order)
            return self.store[e.name]
        if isinstance(e, Const):
            return ConstStream(e.value, self.width)
        raise TypeError("operand not atomic: %r" % (e,))

    def _compile(self, eq: Equation):
        lhs = eq.lhs[0]
        rhs = eq.rhs
        if isinstance(rhs, Const):
            return ("const", lhs, known(rhs.value))
        if isinstance(rhs, Var):
            return ("copy", lhs, self._stream(rhs))
        if isinstance(rhs, Call):
            return ("apply", lhs, rhs.fn, [self._stream(a) for a in rhs.args], None)
        if isinstance(rhs, If):
            streams = [self._stream(a) for a in (rhs.cond, rhs.on_true, rhs.on_false)]
            return ("apply", lhs, "if", streams, None)
        if isinstance(rhs, TensorLit):
            return ("apply", lhs, "tensor", [self._stream(a) for a in rhs.elems], None)
        if isinstance(rhs, Index):
            return ("apply", lhs, "index", [self._stream(rhs.e)], rhs.k)
        if isinstance(rhs, When):
            return ("when", lhs, self._stream(rhs.e), self._stream(rhs.cond))
        if isinstance(rhs, Merge):
            return ("merge", lhs, self._stream(rhs.cond),
                    self._stream(rhs.on_true), self._stream(rhs.on_false))
        if isinstance(rhs, Fby):
            return ("fby", lhs, self._stream(rhs.init), self._stream(rhs.body),
                    rhs.back, rhs.inits)
        if isinstance(rhs, Post):
            return ("post", lhs, self._stream(rhs.e))
        raise TypeError("equation not normalized: %r" % (rhs,))

    def _step(self, spec, n: int) -> ExtVal:
        kind = spec[0]
        if kind == "apply":
            return sf_apply_step(spec[2], spec[3], n, k=spec[4])
        if kind == "fby":
            return sf_fby_step(spec[2], spec[3], n, back=spec[4],
                               end=self.end, inits=spec[5])
        if kind == "when":
            return sf_when_step(spec[2], spec[3], n)
        if kind == "merge":
            return sf_merge_step(spec[2], spec[3], spec[4], n)
        if kind == "post":
            return sf_post_step(spec[2], n, h=self.h)
        if kind == "copy":
            return _at(spec[2], n)
        return spec[2]  # const

    def _emit(self, lhs: str, n: int, v: ExtVal) -> bool:
        cells = self.store[lhs]
        old = cells[n]
        new = join(old, v)
        if new == old:
            return False
        cells[n] = new
        if new is ERR and self.err is None:
            if old.is_decided and v.is_decided:
                reason = ("conflicting writes to %s at cycle %d" % (lhs, n))
            else:
                reason = ("operator error or clock mismatch at %s, cycle %d"
                          % (lhs, n))
            self.err = ErrSite(n, lhs, old, v, reason)
        return True

    def _sweep_cycle(self, n: int) -> bool:
        """Re-evaluate every equation at cycle n until the cycle is stable."""
        changed = False
        for _ in range(2 * len(self.eqs) + 2):
            any_change = False
            for spec in self.eqs:
                v = self._step(spec, n)
                if v is not BOT and self._emit(spec[1], n, v):
                    any_change = True
            if not any_change:
                break
            changed = True
        return changed

    def run(self) -> SyncResult:
        sweeps = 0
        forward = True
        cap = 2 * len(self.var_order) * max(self.width, 1) + 4
        while sweeps < cap:
            sweeps += 1
            cycles = range(self.width) if forward else range(self.width - 1, -1, -1)
            changed = False
            for n in cycles:
                if self._sweep_cycle(n):
                    changed = True
            forward = not forward
            if not changed:
                break
        else:
            raise RuntimeError("fixed point iteration did not settle")
        restricted = {v: self.store[v][: self.cycles] for v in self.var_order}
        trace = Trace(list(self.var_order), restricted)
        undecided = [(v, n)
                     for v in self.var_order
                     for n in range(self.cycles)
                     if restricted[v][n] is BOT]
        return SyncResult(trace, self.err, undecided, sweeps, self.store)


def eval_sync(node: Normalized, inputs: Trace, cycles: int,
              h: Optional[int] = None, end: Optional[int] = None,
              zmax: int = 1024, warm: Optional[Trace] = None) -> Trace:
    """Evaluate a normalized node and return the trace of every variable,
    restricted to cycles 0..cycles-1."""
    engine = SyncEngine(node, inputs, cycles, h=h, end=end, zmax=zmax)
    if warm is not None:
        for name, col in warm.columns.items():
            if name in engine.store:
                cells = engine.store[name]
                for n in range(min(len(col), engine.width)):
                    cells[n] = join(cells[n], col[n])
    return engine.run().trace


def check_synchrony(trace: Trace) -> Optional[Tuple[int, str]]:
    """The earliest (cycle, variable) holding an error cell, if any."""
    for n in range(trace.length):
        for v in sorted(trace.vars):
            if trace.cell(v, n) is ERR:
                return (n, v)
    return None
