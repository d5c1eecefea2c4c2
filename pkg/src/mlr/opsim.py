"""Operational fixed-point simulator over extended-value cells.

The simulator executes a normalized node by chaotic iteration, but
unlike the synchronous engine it is demand-driven and incremental: it
keeps a window of live cycles, always fires at the lowest cycle where
some equation can raise a cell, opens new cycles only when every open
cycle is quiescent, and reclaims completed cycles behind a retention
floor.  Demand is carried by the Pending cell, which marks a variable
whose presence is established while its value is still unknown.

Value information flows from equation inputs to outputs; presence and
absence travel in both directions.  Every iteration function is
monotone and inflationary on the cell lattice, so the final state is a
least fixed point and does not depend on the firing order.

Lookahead is handled natively: `o = post y` joins the cell of y at
cycle n+1 into o at cycle n, and pushes demand forward into y.  The
pair of recurrences `fby` / `fby back` scan the output's own history
(skipping decided absences) for the steady regime, and fire their
initializer when every cell on the closed side is absent -- which for
`fby back` is only decidable when the stream end is known, so under
open-ended execution the trailing initializer never fires.
"""

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import (Callable, Dict, List, Optional, Sequence, Set, Tuple)

from .ast import (Call, Const, Equation, Fby, If, Index, Merge, Post,
                  TensorLit, Var, When)
from .builtins import EvalError, apply_op
from .domain import (ABSENT, BOT, ERR, PENDING, TAG_ABSENT, TAG_BOT,
                     TAG_ERR, TAG_KNOWN, TAG_PENDING, ExtVal, join, known,
                     nv)
from .normalize import Normalized
from .sync import ErrSite
from .trace import Trace


class FinitudeMode(Enum):
    """Whether the input stream is known to end at a given cycle."""

    CLOSED = "closed"
    OPEN = "open"


_DEMANDED = (TAG_KNOWN, TAG_PENDING)

Getter = Callable[[int], ExtVal]


# ---------------------------------------------------------------------------
# stateless iteration functions
# ---------------------------------------------------------------------------

def siter_const(k, w: ExtVal) -> ExtVal:
    """y = k: produce the constant once the output is demanded."""
    if w.tag in _DEMANDED or w.tag == TAG_ERR:
        return join(known(k), w)
    return w


def siter_funapp(fn: str, vs: Sequence[ExtVal], ws: Sequence[ExtVal],
                 k: Optional[int] = None
                 ) -> Tuple[Tuple[ExtVal, ...], Tuple[ExtVal, ...]]:
    """(y..) = f(x..): values flow forward, status flows both ways.

    The synchronization status s is the join of nv over all cells.  If
    it is exactly Pending and every argument is Known, the function
    fires; otherwise s (absence, error, or bare demand) is joined onto
    every cell of the equation.
    """
    s = BOT
    for x in vs:
        s = join(s, nv(x))
    for w in ws:
        s = join(s, nv(w))
    if s is PENDING and all(x.tag == TAG_KNOWN for x in vs):
        try:
            out = apply_op(fn, [x.value for x in vs], k=k)
        except EvalError:
            out = None
        if out is None:
            new_ws = tuple(ERR for _ in ws)
        else:
            new_ws = tuple(join(known(out), w) for w in ws)
        if any(w.tag == TAG_ERR for w in new_ws):
            return tuple(ERR for _ in vs), tuple(ERR for _ in ws)
        return tuple(vs), new_ws
    if s is BOT:
        return tuple(vs), tuple(ws)
    return (tuple(join(x, s) for x in vs), tuple(join(w, s) for w in ws))


def siter_when(o: ExtVal, y: ExtVal, c: ExtVal
               ) -> Tuple[ExtVal, ExtVal, ExtVal]:
    """o = y when c, one demand-protocol round at a single cycle."""
    # consequences of the condition's cell
    if c is ABSENT:
        o, y = join(o, ABSENT), join(y, ABSENT)
    elif c is PENDING:
        y = join(y, PENDING)
    elif c.tag == TAG_KNOWN:
        if c.value:
            o = join(o, join(y, PENDING))
        else:
            o = join(o, ABSENT)
        y = join(y, PENDING)
    # consequences of the operand's cell
    if y is ABSENT:
        o, c = join(o, ABSENT), join(c, ABSENT)
    elif y.tag in _DEMANDED:
        c = join(c, PENDING)
    # consequences of the output's cell
    if o.tag in _DEMANDED:
        y, c = join(y, PENDING), join(c, PENDING)
    if o is ERR or y is ERR or c is ERR:
        return ERR, ERR, ERR
    return o, y, c


def siter_merge(o: ExtVal, c: ExtVal, y: ExtVal, z: ExtVal
                ) -> Tuple[ExtVal, ExtVal, ExtVal, ExtVal]:
    """o = merge c y z: the condition routes demand to one arm."""
    if c is ABSENT:
        o, y, z = join(o, ABSENT), join(y, ABSENT), join(z, ABSENT)
    elif c is PENDING:
        o = join(o, PENDING)
    elif c.tag == TAG_KNOWN:
        if c.value:
            o = join(o, join(y, PENDING))
            y, z = join(y, PENDING), join(z, ABSENT)
        else:
            o = join(o, join(z, PENDING))
            y, z = join(y, ABSENT), join(z, PENDING)
    if y.tag in _DEMANDED or z.tag in _DEMANDED:
        c = join(c, PENDING)
    if o is ABSENT:
        c, y, z = join(c, ABSENT), join(y, ABSENT), join(z, ABSENT)
    elif o.tag in _DEMANDED:
        c = join(c, PENDING)
    if ERR in (o, c, y, z):
        return ERR, ERR, ERR, ERR
    return o, c, y, z


def _scan_fw(o_at: Getter, n: int) -> int:
    """Largest m < n with o not decided-absent, or -1 if all are."""
    m = n - 1
    while m >= 0 and o_at(m) is ABSENT:
        m -= 1
    return m


def _scan_bw(o_at: Getter, n: int, limit: Optional[int]) -> int:
    """Smallest m > n with o not decided-absent; limit+1 if all are up
    to limit (closed end), otherwise unbounded until a non-absent cell
    appears (an unopened cycle reads as Bot and stops the scan)."""
    m = n + 1
    while (limit is None or m <= limit) and o_at(m) is ABSENT:
        m += 1
    return m


def _steady(o_n: ExtVal, y_m: ExtVal) -> ExtVal:
    """Value carried from the nearest non-absent cycle, if usable."""
    if o_n.tag in _DEMANDED and y_m.tag in _DEMANDED:
        return y_m if y_m.tag == TAG_KNOWN else BOT
    return BOT


def iter_fby(o_at: Getter, y_at: Getter, init_at: Getter, n: int,
             var_init: bool = False, back: bool = False,
             mode: FinitudeMode = FinitudeMode.CLOSED,
             length: Optional[int] = None
             ) -> Tuple[ExtVal, ExtVal, Optional[ExtVal]]:
    """One iteration of `o = init fby y` (or fby back) at cycle n.

    Returns the new cells (o_n, y_n, init_n); init_n is None for a
    constant initializer, which is present at every cycle and needs no
    write-back.  The synchronization part ties the presence of o to
    the body (and, for a stream initializer, to the initializer); the
    value part fires the initializer when every cell on the closed
    side of n is decided absent, and otherwise carries the value of
    the body at the nearest non-absent cycle.
    """
    o_n, y_n, i_n = o_at(n), y_at(n), init_at(n)
    new_o = join(o_n, nv(y_n))
    new_y = join(y_n, nv(o_n))
    new_i: Optional[ExtVal] = None
    if var_init:
        new_o = join(new_o, nv(i_n))
        new_i = join(i_n, nv(o_n))

    val = BOT
    if new_o.tag in _DEMANDED:
        if not back:
            m = _scan_fw(o_at, n)
            if m < 0:
                iv = init_at(n)
                val = iv if iv.tag == TAG_KNOWN else BOT
            else:
                val = _steady(new_o, y_at(m))
        else:
            limit = (length - 1) if (mode is FinitudeMode.CLOSED
                                     and length is not None) else None
            m = _scan_bw(o_at, n, limit)
            if limit is not None and m > limit:
                iv = init_at(n)
                val = iv if iv.tag == TAG_KNOWN else BOT
            else:
                val = _steady(new_o, y_at(m))
    new_o = join(new_o, val)

    if new_o is ERR or new_y is ERR or (new_i is ERR):
        return ERR, ERR, (ERR if var_init else None)
    return new_o, new_y, new_i


def iter_post(o_n: ExtVal, y_next: ExtVal) -> Tuple[ExtVal, ExtVal]:
    """o = post y at cycle n: o_n receives the cell of y at n+1
    (value and presence alike), and demand on o_n flows into y at n+1.
    """
    new_o = join(o_n, y_next)
    new_y = join(y_next, nv(o_n))
    if new_o is ERR or new_y is ERR:
        return ERR, ERR
    return new_o, new_y


# ---------------------------------------------------------------------------
# simulation state
# ---------------------------------------------------------------------------

@dataclass
class OpStats:
    steps: int = 0             # firings that raised at least one cell
    max_window: int = 0        # high-water mark of live cycles
    reclaimed: int = 0         # cycles frozen below the retention floor
    injections: int = 0        # stall-time demand injections


@dataclass
class OpResult:
    trace: Trace
    err: Optional[ErrSite]
    undecided: List[Tuple[str, int]]
    diverged: bool
    reason: Optional[str]
    stats: OpStats


class _CompiledEq:
    __slots__ = ("idx", "kind", "lhs", "args", "fn", "k", "back",
                 "var_init", "const_init", "last_present")

    def __init__(self, idx: int, kind: str, lhs: str):
        self.idx = idx
        self.kind = kind
        self.lhs = lhs
        self.args: List[str] = []
        self.fn: Optional[str] = None
        self.k: Optional[int] = None
        self.back = False
        self.var_init: Optional[str] = None
        self.const_init: Optional[ExtVal] = None
        self.last_present = -1   # highest cycle with o decided non-absent


class OpEngine:
    """Event-driven least-fixed-point simulation of one node.

    The engine owns a window of live cycles [floor, lst].  Reads below
    the floor indicate a bookkeeping bug and are asserted.  All writes
    go through a join, so cells only ever rise.
    """

    def __init__(self, node: Normalized, inputs: Trace, cycles: int,
                 end: Optional[int] = None, max_window: int = 4096,
                 zmax: int = 1024, choose_seed: Optional[int] = None,
                 accel: bool = True):
        if cycles < 0:
            raise ValueError("cycles must be nonnegative")
        self.node = node
        self.inputs = inputs
        self.cycles = cycles
        self.end = end
        self.mode = (FinitudeMode.CLOSED if end is not None
                     else FinitudeMode.OPEN)
        self.limit = end if end is not None else cycles + zmax
        self.max_window = max_window
        self.accel = accel
        self._rng = (random.Random(choose_seed)
                     if choose_seed is not None else None)

        self.var_order: List[str] = []
        seen: Set[str] = set()
        for name in node.input_names():
            if name not in seen:
                seen.add(name)
                self.var_order.append(name)
        for eq in node.eqs:
            for lhs in eq.lhs:
                if lhs not in seen:
                    seen.add(lhs)
                    self.var_order.append(lhs)
        self.input_names = list(node.input_names())

        self.rows: Dict[int, Dict[str, ExtVal]] = {}
        self.frozen: Dict[int, Dict[str, ExtVal]] = {}
        self.floor = 0
        self.lst = -1
        self.todo: Dict[int, Set[int]] = {}
        self.err: Optional[ErrSite] = None
        self.diverged = False
        self.reason: Optional[str] = None
        self.stats = OpStats()

        self.eqs = [self._compile(i, eq) for i, eq in enumerate(node.eqs)]
        self._watchers: Dict[str, List[_CompiledEq]] = {}
        for ceq in self.eqs:
            for v in {ceq.lhs, *ceq.args}:
                self._watchers.setdefault(v, []).append(ceq)

    # -- compilation --------------------------------------------------

    def _atom(self, e) -> Tuple[str, Optional[str], Optional[ExtVal]]:
        if isinstance(e, Var):
            return "var", e.name, None
        if isinstance(e, Const):
            return "const", None, known(e.value)
        raise TypeError("operand not atomic: %r" % (e,))

    def _compile(self, idx: int, eq: Equation) -> _CompiledEq:
        lhs = eq.lhs[0]
        rhs = eq.rhs
        if isinstance(rhs, Const):
            ceq = _CompiledEq(idx, "const", lhs)
            ceq.const_init = known(rhs.value)
            return ceq
        if isinstance(rhs, Var):
            ceq = _CompiledEq(idx, "apply", lhs)
            ceq.fn, ceq.args = "id", [rhs.name]
            return ceq
        if isinstance(rhs, (Call, If, TensorLit, Index)):
            ceq = _CompiledEq(idx, "apply", lhs)
            if isinstance(rhs, Call):
                ceq.fn, exprs = rhs.fn, rhs.args
            elif isinstance(rhs, If):
                ceq.fn, exprs = "if", [rhs.cond, rhs.on_true, rhs.on_false]
            elif isinstance(rhs, TensorLit):
                ceq.fn, exprs = "tensor", rhs.elems
            else:
                ceq.fn, exprs, ceq.k = "index", [rhs.e], rhs.k
            ceq.args = [a.name for a in exprs]
            return ceq
        if isinstance(rhs, When):
            ceq = _CompiledEq(idx, "when", lhs)
            ceq.args = [rhs.e.name, rhs.cond.name]
            return ceq
        if isinstance(rhs, Merge):
            ceq = _CompiledEq(idx, "merge", lhs)
            ceq.args = [rhs.cond.name, rhs.on_true.name, rhs.on_false.name]
            return ceq
        if isinstance(rhs, Fby):
            ceq = _CompiledEq(idx, "fbyback" if rhs.back else "fby", lhs)
            kind, name, cell = self._atom(rhs.init)
            if kind == "var":
                ceq.var_init = name
                ceq.args = [rhs.body.name, name]
            else:
                ceq.const_init = cell if rhs.inits else BOT
                ceq.args = [rhs.body.name]
            return ceq
        if isinstance(rhs, Post):
            ceq = _CompiledEq(idx, "post", lhs)
            ceq.args = [rhs.e.name]
            return ceq
        raise TypeError("equation not normalized: %r" % (rhs,))

    # -- cell access ---------------------------------------------------

    def _cell(self, var: str, n: int) -> ExtVal:
        row = self.rows.get(n)
        if row is None:
            # reclaimed cycles are final; reads below the floor only come
            # from delayed-operator history scans, never from live work
            row = self.frozen.get(n)
            if row is None:
                return BOT
        return row.get(var, BOT)

    def _getter(self, var: str) -> Getter:
        return lambda m: self._cell(var, m)

    def _raise(self, var: str, n: int, val: ExtVal) -> bool:
        """Join val into (var, n); returns True if the cell rose."""
        if val is BOT:
            return False
        if n >= self.limit:
            return False        # beyond the closed end or the hard cap
        row = self.rows.setdefault(n, {})
        old = row.get(var, BOT)
        new = join(old, val)
        if new == old:
            return False
        row[var] = new
        if new is ERR and self.err is None:
            if old.is_decided and val.is_decided:
                reason = "conflicting writes to %s at cycle %d" % (var, n)
            else:
                reason = ("operator error or clock mismatch at %s, cycle %d"
                          % (var, n))
            self.err = ErrSite(n, var, old, val, reason)
        self._notify(var, n, new)
        return True

    # -- worklist maintenance -------------------------------------------

    def _enqueue(self, ceq: _CompiledEq, n: int):
        if n < self.floor or n >= self.limit:
            return
        self.todo.setdefault(n, set()).add(ceq.idx)

    def _notify(self, var: str, n: int, new: ExtVal):
        for ceq in self._watchers.get(var, ()):
            if ceq.kind in ("const", "apply", "when", "merge"):
                self._enqueue(ceq, n)
            elif ceq.kind == "post":
                self._enqueue(ceq, n)
                if var == ceq.args[0]:
                    self._enqueue(ceq, n - 1)
            elif ceq.kind == "fby":
                if var == ceq.lhs and new.is_decided and new is not ABSENT:
                    if n > ceq.last_present:
                        ceq.last_present = n
                self._enqueue(ceq, n)
                self._enqueue(ceq, n + 1)
                if var == ceq.lhs:
                    m = n + 1
                    while m <= self.lst and self._cell(ceq.lhs, m) is ABSENT:
                        m += 1
                    if m > n + 1:
                        self._enqueue(ceq, m)
            else:  # fbyback
                self._enqueue(ceq, n)
                self._enqueue(ceq, n - 1)
                if var == ceq.lhs:
                    m = n - 1
                    while m >= self.floor and \
                            self._cell(ceq.lhs, m) is ABSENT:
                        m -= 1
                    if m < n - 1 and m >= self.floor:
                        self._enqueue(ceq, m)

    # -- equation evaluation ---------------------------------------------

    def _eval(self, ceq: _CompiledEq, n: int) -> List[Tuple[str, int, ExtVal]]:
        """Candidate writes of one iteration of ceq at cycle n."""
        kind = ceq.kind
        if kind == "const":
            w = self._cell(ceq.lhs, n)
            return [(ceq.lhs, n, siter_const(ceq.const_init.value, w))]
        if kind == "apply":
            vs = [self._cell(a, n) for a in ceq.args]
            ws = [self._cell(ceq.lhs, n)]
            if ceq.fn == "id":
                s = join(nv(vs[0]), nv(ws[0]))
                if s is PENDING and vs[0].tag == TAG_KNOWN:
                    new = (vs[0], join(vs[0], ws[0]))
                else:
                    new = (join(vs[0], s), join(ws[0], s))
                if ERR in new:
                    new = (ERR, ERR)
                return [(ceq.args[0], n, new[0]), (ceq.lhs, n, new[1])]
            nvs, nws = siter_funapp(ceq.fn, vs, ws, k=ceq.k)
            out = [(a, n, x) for a, x in zip(ceq.args, nvs)]
            out.append((ceq.lhs, n, nws[0]))
            return out
        if kind == "when":
            o = self._cell(ceq.lhs, n)
            y, c = (self._cell(a, n) for a in ceq.args)
            no, ny, nc = siter_when(o, y, c)
            return [(ceq.lhs, n, no), (ceq.args[0], n, ny),
                    (ceq.args[1], n, nc)]
        if kind == "merge":
            o = self._cell(ceq.lhs, n)
            c, y, z = (self._cell(a, n) for a in ceq.args)
            no, nc, ny, nz = siter_merge(o, c, y, z)
            return [(ceq.lhs, n, no), (ceq.args[0], n, nc),
                    (ceq.args[1], n, ny), (ceq.args[2], n, nz)]
        if kind == "post":
            y = ceq.args[0]
            o_n = self._cell(ceq.lhs, n)
            y_next = self._cell(y, n + 1) if n + 1 < self.limit else BOT
            no, ny = iter_post(o_n, y_next)
            return [(ceq.lhs, n, no), (y, n + 1, ny)]
        # fby / fbyback
        y = ceq.args[0]
        if ceq.var_init is not None:
            init_at = self._getter(ceq.var_init)
        else:
            cell = ceq.const_init
            init_at = lambda m: cell
        no, ny, ni = iter_fby(
            self._getter(ceq.lhs), self._getter(y), init_at, n,
            var_init=ceq.var_init is not None, back=(kind == "fbyback"),
            mode=self.mode, length=self.end)
        out = [(ceq.lhs, n, no), (y, n, ny)]
        if ni is not None:
            out.append((ceq.var_init, n, ni))
        return out

    def _would_rise(self, ceq: _CompiledEq, n: int) -> bool:
        for var, m, val in self._eval(ceq, n):
            if val is BOT or m >= self.limit:
                continue
            old = self.rows.get(m, {}).get(var, BOT)
            if join(old, val) != old:
                return True
        return False

    def _fire(self, ceq: _CompiledEq, n: int) -> bool:
        rose = False
        for var, m, val in self._eval(ceq, n):
            if self._raise(var, m, val):
                rose = True
        if rose:
            self.stats.steps += 1
        return rose

    def compute_todo(self, n: int) -> List[int]:
        """Equations whose iteration strictly raises a cell at cycle n."""
        return [ceq.idx for ceq in self.eqs if self._would_rise(ceq, n)]

    # -- cycle management --------------------------------------------------

    def _open_next(self):
        n = self.lst + 1
        self.lst = n
        self.rows.setdefault(n, {})
        for name in self.input_names:
            if name in self.inputs.columns and n < self.inputs.length:
                self._raise(name, n, self.inputs.cell(name, n))
        if self.accel:
            for ceq in self.eqs:
                self._enqueue(ceq, n)
        window = self.lst - self.floor + 1
        if window > self.stats.max_window:
            self.stats.max_window = window

    def _complete(self, n: int) -> bool:
        row = self.rows.get(n, {})
        return all(row.get(v, BOT).is_decided for v in self.var_order)

    def _reclaim(self):
        hold = self.lst + 1
        for ceq in self.eqs:
            if ceq.kind == "fby":
                hold = min(hold, max(ceq.last_present, 0))
        # A cycle may be frozen once every cell in it is decided and no
        # equation can move there any more.  Cross-cycle needs require no
        # extra lookahead guard: a delayed operator's cell at this cycle
        # cannot itself be decided until the neighbour it reads exists.
        while (self.floor < hold and self.floor <= self.lst
               and self._complete(self.floor)
               and not self.compute_todo(self.floor)):
            self.frozen[self.floor] = self.rows.pop(self.floor)
            self.todo.pop(self.floor, None)
            self.floor += 1
            self.stats.reclaimed += 1

    def _inject(self) -> bool:
        """Demand the still-unknown cells of the main outputs.

        Runs only at a true stall (no equation can fire anywhere).
        Programs whose outputs are driven by their inputs decide every
        output cell before a stall, so injection touches nothing; for
        input-free recurrences it provides the first demand.
        """
        rose = False
        for out in self.node.outputs:
            for n in range(self.floor, self.lst + 1):
                if self._cell(out, n) is BOT:
                    if self._raise(out, n, PENDING):
                        rose = True
        if rose:
            self.stats.injections += 1
        return rose

    # -- main loop ----------------------------------------------------------

    def _lowest_pending(self) -> Optional[Tuple[int, _CompiledEq]]:
        if self.accel:
            while self.todo:
                n = min(self.todo)
                bucket = self.todo[n]
                if not bucket or n < self.floor:
                    del self.todo[n]
                    continue
                if self._rng is not None:
                    idx = self._rng.choice(sorted(bucket))
                else:
                    idx = min(bucket)
                bucket.discard(idx)
                if not bucket:
                    del self.todo[n]
                if n > self.lst:
                    # frontier demand: open cycles up to n first
                    self._enqueue(self.eqs[idx], n)
                    return (n, None)
                return (n, self.eqs[idx])
            return None
        for n in range(self.floor, self.lst + 1):
            ids = self.compute_todo(n)
            if ids:
                if self._rng is not None:
                    return (n, self.eqs[self._rng.choice(ids)])
                return (n, self.eqs[ids[0]])
        return None

    def _frontier_has_work(self) -> bool:
        """Would opening the next cycle supply any information?

        Checked exactly (not from the worklist) so that accelerated and
        rescanning runs stall, inject and open at the same points.
        """
        n = self.lst + 1
        if n >= self.limit:
            return False
        for name in self.input_names:
            if name in self.inputs.columns and n < self.inputs.length:
                if self.inputs.cell(name, n) is not BOT:
                    return True
        return bool(self.compute_todo(n))

    def _outputs_decided(self) -> bool:
        upto = min(self.cycles, self.lst + 1)
        if upto < self.cycles:
            return False
        for out in self.node.outputs:
            for n in range(self.cycles):
                cell = (self.rows.get(n) or self.frozen.get(n, {})).get(
                    out, BOT)
                if not cell.is_decided:
                    return False
        return True

    def run(self) -> OpResult:
        if self.limit > 0:
            self._open_next()
        while self.limit > 0:
            if self.err is not None:
                break
            found = self._lowest_pending()
            if found is not None and found[1] is None:
                n = found[0]
                while self.lst < n and self.lst + 1 < self.limit:
                    self._open_next()
                continue
            if found is None:
                if self.mode is FinitudeMode.OPEN and self._outputs_decided():
                    break
                if self.lst + 1 < self.limit:
                    if self._frontier_has_work() or not self._inject():
                        self._open_next()
                    continue
                if self._inject():
                    continue
                if (self.mode is FinitudeMode.OPEN
                        and not self._outputs_decided()):
                    self.diverged = True
                    self.reason = ("no progress before the lookahead cap; "
                                   "outputs undecided")
                break
            n, ceq = found
            self._fire(ceq, n)
            self._reclaim()
            if self.lst - self.floor + 1 > self.max_window:
                self.diverged = True
                self.reason = ("live window exceeded %d cycles"
                               % self.max_window)
                break
        return self._result()

    # -- result assembly ------------------------------------------------------

    def _result(self) -> OpResult:
        report = min(self.cycles, self.limit)
        cols: Dict[str, List[ExtVal]] = {v: [] for v in self.var_order}
        for n in range(report):
            row = self.rows.get(n)
            if row is None:
                row = self.frozen.get(n, {})
            for v in self.var_order:
                cols[v].append(row.get(v, BOT))
        trace = Trace(list(self.var_order), cols)
        undecided = [(v, n)
                     for v in self.node.outputs
                     for n in range(report)
                     if not trace.cell(v, n).is_decided]
        return OpResult(trace, self.err, undecided, self.diverged,
                        self.reason, self.stats)


def eval_op(node: Normalized, inputs: Trace, cycles: int,
            end: Optional[int] = None, max_window: int = 4096,
            zmax: int = 1024, choose_seed: Optional[int] = None,
            accel: bool = True) -> OpResult:
    """Simulate a normalized node and return its operational result.

    end=None runs open-ended (the trailing initializer of `fby back`
    never fires and input exhaustion leaves cells undecided); end=l
    declares that streams stop after cycle l-1.
    """
    eng = OpEngine(node, inputs, cycles, end=end, max_window=max_window,
                   zmax=zmax, choose_seed=choose_seed, accel=accel)
    return eng.run()
