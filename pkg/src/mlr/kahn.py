"""Asynchronous stream semantics used as a differential reference.

A variable's history here is untimed: just the finite prefix of values it
has produced so far, with no absent cells and no alignment between
variables.  Each primitive is a stream transformer over such prefixes;
the program's meaning is the least fixed point of applying them until no
prefix grows.

This view makes backward recurrences visible as deadlocks: an equation
that needs a token from the future of its own output can never produce
the first token, so its stream stays empty while the run stalls.  The
forward fragment (no post, no backward initialization) instead agrees
with the synchronous evaluator once absent cells are erased, and the
entry point checks that agreement on every eligible run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .ast import (Call, Const, Equation, Fby, If, Index, Merge, Post,
                  TensorLit, Var, When)
from .builtins import apply_op
from .domain import known, values_equal
from .normalize import Normalized
from .trace import Trace, render_cell


@dataclass
class KahnStream:
    """Finite prefix of an untimed value stream.

    closed means the prefix is the entire stream: no token can ever be
    appended.  An open stream may still grow (or may be stuck forever,
    which is exactly what the deadlock verdict reports).
    """
    values: List[Any] = field(default_factory=list)
    closed: bool = False

    def __len__(self) -> int:
        return len(self.values)


def _extends(old: KahnStream, new: KahnStream) -> bool:
    if len(new) < len(old):
        return False
    return all(values_equal(a, b)
               for a, b in zip(old.values, new.values))


def kahn_step(primitive: str, args: Sequence[KahnStream],
              k: Optional[int] = None) -> KahnStream:
    """One application of a primitive's stream transformer.

    primitive is "fby", "post", "when", "merge", or the name of a
    pointwise builtin.  Every rule is total: a missing token simply
    stops the output prefix early.
    """
    if primitive == "fby":
        init, body = args
        if not init.values:
            return KahnStream([], init.closed)
        return KahnStream([init.values[0]] + list(body.values), body.closed)
    if primitive == "post":
        (s,) = args
        return KahnStream(list(s.values[1:]), s.closed)
    if primitive == "when":
        y, c = args
        out = []
        m = min(len(y), len(c))
        for i in range(m):
            if c.values[i]:
                out.append(y.values[i])
        closed = (y.closed and len(y) == m) or (c.closed and len(c) == m)
        return KahnStream(out, closed)
    if primitive == "merge":
        c, t, f = args
        out = []
        ti = fi = 0
        closed = False
        for i in range(len(c) + 1):
            if i >= len(c):
                closed = c.closed
                break
            if c.values[i]:
                if ti >= len(t):
                    closed = t.closed
                    break
                out.append(t.values[ti])
                ti += 1
            else:
                if fi >= len(f):
                    closed = f.closed
                    break
                out.append(f.values[fi])
                fi += 1
        return KahnStream(out, closed)
    # pointwise function application, one output token per full argument row
    m = min(len(a) for a in args) if args else 0
    out = [apply_op(primitive, [a.values[i] for a in args], k=k)
           for i in range(m)]
    closed = any(a.closed and len(a) == m for a in args)
    return KahnStream(out, closed)


@dataclass
class KahnResult:
    streams: Dict[str, KahnStream]
    order: List[str]
    outputs: List[str]
    demanded: int
    deadlock: bool
    blocked: List[str]
    rounds: int
    capped: bool
    erasure_mismatch: Optional[str] = None

    def prefix(self, var: str) -> List[Any]:
        return list(self.streams[var].values)

    def to_csv(self) -> str:
        """Ragged columns, padded with empty cells at the tail."""
        import csv as _csv
        import io as _io
        buf = _io.StringIO()
        w = _csv.writer(buf, lineterminator="\n")
        w.writerow(["cycle"] + self.order)
        depth = max((len(self.streams[v]) for v in self.order), default=0)
        for i in range(depth):
            row = [i]
            for v in self.order:
                vals = self.streams[v].values
                row.append(render_cell(known(vals[i])) if i < len(vals)
                           else "")
            w.writerow(row)
        return buf.getvalue()


class _Eq:
    __slots__ = ("lhs", "kind", "args", "fn", "k", "const", "init")

    def __init__(self, lhs, kind, args=(), fn=None, k=None, const=None,
                 init=None):
        self.lhs = lhs
        self.kind = kind
        self.args = list(args)
        self.fn = fn
        self.k = k
        self.const = const
        self.init = init


def _compile(eq: Equation) -> _Eq:
    lhs = eq.lhs[0]
    rhs = eq.rhs
    if isinstance(rhs, Const):
        return _Eq(lhs, "const", const=rhs.value)
    if isinstance(rhs, Var):
        return _Eq(lhs, "copy", [rhs.name])
    if isinstance(rhs, (Call, If, TensorLit, Index)):
        if isinstance(rhs, Call):
            fn, exprs, k = rhs.fn, rhs.args, None
        elif isinstance(rhs, If):
            fn, exprs, k = "if", [rhs.cond, rhs.on_true, rhs.on_false], None
        elif isinstance(rhs, TensorLit):
            fn, exprs, k = "tensor", rhs.elems, None
        else:
            fn, exprs, k = "index", [rhs.e], rhs.k
        return _Eq(lhs, "apply", [a.name for a in exprs], fn=fn, k=k)
    if isinstance(rhs, When):
        return _Eq(lhs, "when", [rhs.e.name, rhs.cond.name])
    if isinstance(rhs, Merge):
        return _Eq(lhs, "merge",
                   [rhs.cond.name, rhs.on_true.name, rhs.on_false.name])
    if isinstance(rhs, Fby):
        if rhs.back:
            # no asynchronous rule reads backward; the stream never grows
            return _Eq(lhs, "stuck")
        if isinstance(rhs.init, Const):
            return _Eq(lhs, "fby", [rhs.body.name], init=rhs.init.value)
        return _Eq(lhs, "fby", [rhs.init.name, rhs.body.name])
    if isinstance(rhs, Post):
        return _Eq(lhs, "post", [rhs.e.name])
    raise TypeError("equation not normalized: %r" % (rhs,))


def erase_absent(trace: Trace) -> Dict[str, List[Any]]:
    """Per-column erasure: drop absent cells, keep known payloads in order.

    Columns containing undecided or error cells are omitted; erasure is
    only meaningful for settled histories.
    """
    out: Dict[str, List[Any]] = {}
    for v in trace.vars:
        col = trace.columns[v]
        if all(c.is_decided for c in col):
            out[v] = [c.value for c in col if c.is_known]
    return out


def kahn_fixpoint(node: Normalized, inputs: Dict[str, KahnStream],
                  demanded: int,
                  max_rounds: Optional[int] = None) -> KahnResult:
    """Least fixed point by round-robin application of the rules.

    Every stream is capped at `demanded` tokens, so the iteration is
    finite; a full round without growth is a fixed point.  An output
    still open and shorter than demanded at the fixed point is blocked
    on a token that will never arrive: the deadlock verdict.
    """
    eqs = [_compile(eq) for eq in node.eqs]
    if max_rounds is None:
        max_rounds = max(1, demanded) * max(1, len(eqs)) * 4
    streams: Dict[str, KahnStream] = {}
    order: List[str] = []
    for name in node.input_names():
        order.append(name)
        got = inputs.get(name, KahnStream([], True))
        streams[name] = KahnStream(list(got.values)[:demanded], got.closed)
    for ceq in eqs:
        if ceq.lhs not in streams:
            order.append(ceq.lhs)
            streams[ceq.lhs] = KahnStream()

    rounds = 0
    capped = False
    while True:
        if rounds >= max_rounds:
            capped = True
            break
        rounds += 1
        changed = False
        for ceq in eqs:
            old = streams[ceq.lhs]
            if ceq.kind == "const":
                new = KahnStream([ceq.const] * demanded, False)
            elif ceq.kind == "copy":
                src = streams[ceq.args[0]]
                new = KahnStream(list(src.values), src.closed)
            elif ceq.kind == "stuck":
                new = KahnStream([], False)
            elif ceq.kind == "fby" and ceq.init is not None:
                body = streams[ceq.args[0]]
                new = KahnStream([ceq.init] + list(body.values),
                                 body.closed)
            else:
                fn = {"apply": ceq.fn, "when": "when", "merge": "merge",
                      "fby": "fby", "post": "post"}[ceq.kind]
                new = kahn_step(fn, [streams[a] for a in ceq.args],
                                k=ceq.k)
            if len(new) > demanded:
                new = KahnStream(new.values[:demanded], False)
            if not _extends(old, new):
                raise RuntimeError(
                    "non-monotone step at %s: %r -/-> %r"
                    % (ceq.lhs, old.values, new.values))
            if len(new) > len(old) or (new.closed and not old.closed):
                streams[ceq.lhs] = new
                changed = True
        if not changed:
            break

    blocked = [o for o in node.outputs
               if len(streams[o]) < demanded and not streams[o].closed]
    return KahnResult(streams, order, list(node.outputs), demanded,
                      deadlock=bool(blocked), blocked=blocked,
                      rounds=rounds, capped=capped)


def _is_forward(node: Normalized) -> bool:
    for eq in node.eqs:
        if isinstance(eq.rhs, Post):
            return False
        if isinstance(eq.rhs, Fby) and eq.rhs.back:
            return False
    return True


def eval_kahn(node: Normalized, inputs: Trace, cycles: int,
              end: Optional[int] = None,
              max_rounds: Optional[int] = None,
              check_erasure: bool = True) -> KahnResult:
    """Run the asynchronous semantics on a node with timed inputs.

    Input columns are erased to untimed prefixes (absent cells dropped)
    and marked closed.  On a forward-only node the result is checked
    against the erased synchronous trace; a mismatch is reported on the
    result, never suppressed.
    """
    fed: Dict[str, KahnStream] = {}
    for v in inputs.vars:
        col = inputs.columns[v][:cycles]
        fed[v] = KahnStream([c.value for c in col if c.is_known], True)
    res = kahn_fixpoint(node, fed, cycles, max_rounds=max_rounds)
    if check_erasure and _is_forward(node) and not res.capped:
        from .sync import eval_sync
        sync = eval_sync(node, inputs, cycles, end=end)
        erased = erase_absent(sync)
        # the timed trace, absences erased, must be a prefix of the
        # untimed stream: a delay operator may have pushed its newest
        # token past the horizon, so the untimed side can run ahead,
        # but it must never disagree on or miss a produced value
        for v in res.order:
            if v not in erased:
                continue
            got = res.streams[v].values
            want = erased[v]
            if len(got) < len(want) or not all(
                    values_equal(a, b) for a, b in zip(got, want)):
                res.erasure_mismatch = (
                    "%s: asynchronous %r vs erased synchronous %r"
                    % (v, got, want))
                break
    return res
