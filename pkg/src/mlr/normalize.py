"""Lowering to the flat, single-operator form the evaluators assume.

Pipeline: inline every node instantiation (per-instance state, names
prefixed by instance path), split complex expressions into one
dataflow operator per equation, infer types on the split form,
materialize constant sources (tensor literals of constants, zeros,
ones and the seeded initializer draws), rewrite non-constant
recurrence initializers into the guarded constant form, and -- for
the operational pipeline only -- rewrite post into its fby-back
encoding.  Fresh names contain '$', which no user identifier can.
"""

from dataclasses import dataclass
from itertools import count
from typing import Dict, List, Optional, Tuple

import numpy as np

from .ast import (Call, Const, Equation, Fby, If, Index, Merge, NodeDef,
                  Param, Pos, Post, Program, TensorLit, Var, When,
                  walk_exprs)
from .builtins import (default_value, derive_key, glorot_uniform, ones,
                       orthogonal, zeros)
from .types import (DataType, StaticError, check_instantiation_acyclic,
                    infer_types_shapes, SHAPED_SOURCES)


@dataclass
class Normalized:
    """A flat single-operator node plus the typing of every variable."""

    name: str
    inputs: List[Param]
    outputs: List[str]
    eqs: List[Equation]
    types: Dict[str, DataType]

    def input_names(self) -> List[str]:
        return [p.name for p in self.inputs]


def default_main(program: Program) -> str:
    """The node named main when present, otherwise the last node."""
    if program.node("main") is not None:
        return "main"
    return program.nodes[-1].name


# ---- inlining ----

def inline(program: Program, main_name: str) -> Tuple[NodeDef, Dict[str, DataType]]:
    """Flatten every instantiation reachable from main.

    Returns the flat node and the declared types collected from inner
    annotated parameters (renamed like their variables).
    """
    main = program.node(main_name)
    if main is None:
        raise StaticError(Pos(), "unknown main node %r" % main_name)
    node_names = set(program.node_names())
    sites = count()
    sinks = count()
    eqs_out: List[Equation] = []
    declared: Dict[str, DataType] = {}

    def xform(e, ren):
        if isinstance(e, Var):
            return Var(ren(e.name), e.pos)
        if isinstance(e, Const):
            return e
        if isinstance(e, Call):
            args = [xform(a, ren) for a in e.args]
            if e.fn in node_names:
                outs = instantiate(e.fn, args, e.pos)
                if len(outs) != 1:
                    raise StaticError(e.pos, "node %r has %d outputs; only "
                                      "single-output nodes can be used inside "
                                      "an expression" % (e.fn, len(outs)))
                return Var(outs[0], e.pos)
            return Call(e.fn, args, e.pos)
        if isinstance(e, When):
            return When(xform(e.e, ren), xform(e.cond, ren), e.pos)
        if isinstance(e, Merge):
            return Merge(xform(e.cond, ren), xform(e.on_true, ren),
                         xform(e.on_false, ren), e.pos)
        if isinstance(e, If):
            return If(xform(e.cond, ren), xform(e.on_true, ren),
                      xform(e.on_false, ren), e.pos)
        if isinstance(e, Fby):
            return Fby(xform(e.init, ren), xform(e.body, ren), e.back,
                       e.pos, e.inits)
        if isinstance(e, Post):
            return Post(xform(e.e, ren), e.pos)
        if isinstance(e, TensorLit):
            return TensorLit([xform(x, ren) for x in e.elems], e.pos)
        if isinstance(e, Index):
            return Index(xform(e.e, ren), e.k, e.pos)
        raise StaticError(e.pos, "unexpected expression form")

    def instantiate(name: str, args, pos: Pos) -> List[str]:
        d = program.node(name)
        prefix = "%s$%d$" % (name, next(sites))
        if len(args) != len(d.inputs):
            raise StaticError(pos, "node %r expects %d argument%s, got %d"
                              % (name, len(d.inputs),
                                 "" if len(d.inputs) == 1 else "s", len(args)))

        def ren(v: str) -> str:
            return prefix + v

        for p, a in zip(d.inputs, args):
            eqs_out.append(Equation([prefix + p.name], a, pos))
        for p in d.inputs + d.outputs:
            if p.kind is not None:
                declared[prefix + p.name] = \
                    DataType(p.kind, tuple(p.dims) if p.dims else ())
        for eq in d.eqs:
            process_eq(eq, ren)
        return [prefix + p.name for p in d.outputs]

    def process_eq(eq: Equation, ren):
        lhs = [("_$%d" % next(sinks)) if v == "_" else ren(v) for v in eq.lhs]
        if len(lhs) > 1:
            rhs = eq.rhs
            if not (isinstance(rhs, Call) and rhs.fn in node_names):
                raise StaticError(eq.pos, "multiple targets need a node "
                                          "instantiation on the right")
            args = [xform(a, ren) for a in rhs.args]
            outs = instantiate(rhs.fn, args, rhs.pos)
            if len(outs) != len(lhs):
                raise StaticError(eq.pos, "node %r has %d outputs, %d targets"
                                  % (rhs.fn, len(outs), len(lhs)))
            for v, o in zip(lhs, outs):
                eqs_out.append(Equation([v], Var(o, eq.pos), eq.pos))
        else:
            eqs_out.append(Equation(lhs, xform(eq.rhs, ren), eq.pos))

    for eq in main.eqs:
        process_eq(eq, lambda v: v)
    return NodeDef(main.name, main.inputs, main.outputs, eqs_out, main.pos), declared


# ---- expression splitting ----

def split_expressions(node: NodeDef, fresh=None) -> NodeDef:
    """One dataflow operator per equation, operands all variables.

    Constants move to their own equations (except recurrence
    initializers), and no variable appears twice in one equation;
    both are restored with fresh '$' temporaries.
    """
    if fresh is None:
        fresh = count()
    out: List[Equation] = []

    def temp() -> str:
        return "t$%d" % next(fresh)

    def atom(e) -> Var:
        if isinstance(e, Var):
            return e
        v = temp()
        define(v, e)
        return Var(v, e.pos)

    def dedup(lhs: str, operands: List[Var]) -> List[Var]:
        seen = {lhs}
        res = []
        for v in operands:
            if v.name in seen:
                c = temp()
                out.append(Equation([c], Var(v.name, v.pos), v.pos))
                res.append(Var(c, v.pos))
            else:
                seen.add(v.name)
                res.append(v)
        return res

    def define(lhs: str, e):
        if isinstance(e, Const):
            out.append(Equation([lhs], e, e.pos))
        elif isinstance(e, TensorLit):
            if e.elems and all(isinstance(x, Const) for x in e.elems):
                out.append(Equation([lhs], e, e.pos))
            elif not e.elems:
                out.append(Equation([lhs], e, e.pos))
            else:
                elems = dedup(lhs, [atom(x) for x in e.elems])
                out.append(Equation([lhs], TensorLit(elems, e.pos), e.pos))
        elif isinstance(e, Var):
            v, = dedup(lhs, [e])
            out.append(Equation([lhs], v, e.pos))
        elif isinstance(e, Call):
            args = dedup(lhs, [atom(a) for a in e.args])
            out.append(Equation([lhs], Call(e.fn, args, e.pos), e.pos))
        elif isinstance(e, When):
            a, c = dedup(lhs, [atom(e.e), atom(e.cond)])
            out.append(Equation([lhs], When(a, c, e.pos), e.pos))
        elif isinstance(e, Merge):
            c, t, f = dedup(lhs, [atom(e.cond), atom(e.on_true),
                                  atom(e.on_false)])
            out.append(Equation([lhs], Merge(c, t, f, e.pos), e.pos))
        elif isinstance(e, If):
            c, a, b = dedup(lhs, [atom(e.cond), atom(e.on_true),
                                  atom(e.on_false)])
            out.append(Equation([lhs], If(c, a, b, e.pos), e.pos))
        elif isinstance(e, Fby):
            if isinstance(e.init, Const):
                b, = dedup(lhs, [atom(e.body)])
                out.append(Equation(
                    [lhs], Fby(e.init, b, e.back, e.pos, e.inits), e.pos))
            else:
                i, b = dedup(lhs, [atom(e.init), atom(e.body)])
                out.append(Equation(
                    [lhs], Fby(i, b, e.back, e.pos, e.inits), e.pos))
        elif isinstance(e, Post):
            v, = dedup(lhs, [atom(e.e)])
            out.append(Equation([lhs], Post(v, e.pos), e.pos))
        elif isinstance(e, Index):
            v, = dedup(lhs, [atom(e.e)])
            out.append(Equation([lhs], Index(v, e.k, e.pos), e.pos))
        else:
            raise StaticError(e.pos, "unexpected expression form")

    for eq in node.eqs:
        define(eq.lhs[0], eq.rhs)
    return NodeDef(node.name, node.inputs, node.outputs, out, node.pos)


def is_single_op(e) -> bool:
    """Machine check of the normalized-equation shape."""
    allvar = lambda xs: all(isinstance(x, Var) for x in xs)
    if isinstance(e, (Const, Var)):
        return True
    if isinstance(e, TensorLit):
        return allvar(e.elems) or all(isinstance(x, Const) for x in e.elems)
    if isinstance(e, Call):
        return allvar(e.args)
    if isinstance(e, When):
        return allvar([e.e, e.cond])
    if isinstance(e, (Merge, If)):
        return allvar([e.cond, e.on_true, e.on_false])
    if isinstance(e, Fby):
        return isinstance(e.init, (Const, Var)) and isinstance(e.body, Var)
    if isinstance(e, Post):
        return isinstance(e.e, Var)
    if isinstance(e, Index):
        return isinstance(e.e, Var)
    return False


# ---- constant sources ----

_NP_KIND = {"bool": np.bool_, "int": np.int64, "num": np.float64}


def materialize_constants(eqs: List[Equation], types: Dict[str, DataType],
                          seed: int) -> List[Equation]:
    """Turn constant sources into constant equations.

    Tensor literals whose elements are all literal constants become
    tensor payloads; zeros/ones become their value; the stochastic
    initializers draw once, keyed by the seed and the equation name,
    so every engine and schedule sees the same parameters.
    """
    out = []
    for eq in eqs:
        rhs = eq.rhs
        v = eq.lhs[0]
        if isinstance(rhs, TensorLit) and \
                all(isinstance(x, Const) for x in rhs.elems):
            dt = types[v]
            arr = np.array([x.value for x in rhs.elems],
                           dtype=_NP_KIND[dt.kind])
            out.append(Equation([v], Const(arr, rhs.pos), eq.pos))
        elif isinstance(rhs, Call) and rhs.fn in SHAPED_SOURCES:
            shape = types[v].shape
            if rhs.fn == "zeros":
                val = zeros(shape)
            elif rhs.fn == "ones":
                val = ones(shape)
            elif rhs.fn == "glorot_uniform":
                val = glorot_uniform(shape, derive_key(seed, v))
            else:
                val = orthogonal(shape, derive_key(seed, v))
            out.append(Equation([v], Const(val, rhs.pos), eq.pos))
        else:
            out.append(eq)
    return out


# ---- recurrence initializers ----

def lower_initializers(eqs: List[Equation], types: Dict[str, DataType],
                       fresh=None) -> List[Equation]:
    """Put recurrence initializers into constant form where sound.

    An initializer that reads a constant stream (a materialized draw,
    possibly wrapped in param) is replaced by the constant itself, so
    most fby equations end up with a literal initializer.  A genuinely
    dynamic initializer, such as a node input, keeps the general form:
    folding it through an always-present guard would misalign presence,
    since the output of fby must be absent exactly when the initializer
    stream is.
    """
    consts: Dict[str, Const] = {}
    wrapped: Dict[str, str] = {}
    for eq in eqs:
        if len(eq.lhs) != 1:
            continue
        rhs = eq.rhs
        if isinstance(rhs, Const):
            consts[eq.lhs[0]] = rhs
        elif (isinstance(rhs, Call) and rhs.fn == "param"
              and len(rhs.args) == 1 and isinstance(rhs.args[0], Var)):
            wrapped[eq.lhs[0]] = rhs.args[0].name
    out = []
    for eq in eqs:
        rhs = eq.rhs
        if isinstance(rhs, Fby) and isinstance(rhs.init, Var):
            name = rhs.init.name
            name = wrapped.get(name, name)
            if name in consts:
                rhs = Fby(consts[name], rhs.body, rhs.back, rhs.pos,
                          rhs.inits)
                eq = Equation(eq.lhs, rhs, eq.pos)
        out.append(eq)
    return out


# ---- dead equation pruning ----

def prune_unreachable(eqs: List[Equation],
                      outputs: List[str]) -> List[Equation]:
    """Drop equations no output depends on.

    Constant folding and initializer lowering can orphan helper
    definitions (a folded shape argument, an unused parameter copy).
    Keeping them would make the node's variable set larger than its
    meaning; the demand-driven evaluator would also never touch them,
    so their cells could not line up with the always-total one.

    A node with no outputs is all effect, no interface: every equation
    is its meaning, so nothing is pruned.
    """
    if not outputs:
        return eqs
    live = set(outputs)
    changed = True
    while changed:
        changed = False
        for eq in eqs:
            if any(v in live for v in eq.lhs):
                for sub in walk_exprs(eq.rhs):
                    if isinstance(sub, Var) and sub.name not in live:
                        live.add(sub.name)
                        changed = True
    return [eq for eq in eqs if any(v in live for v in eq.lhs)]


# ---- post encoding (operational pipeline) ----

def rewrite_post(eqs: List[Equation], types: Dict[str, DataType],
                 fresh=None) -> List[Equation]:
    """Replace `x = post y` with its fby-back form.

    The gate `false fby back true` drops the final cycle and the body
    recurrence forwards the next present value of y.  Neither carries
    a live initializer (post has none to give), so at a closed trace
    edge these stay pending instead of inventing a value.
    """
    if fresh is None:
        fresh = count()
    out = []
    for eq in eqs:
        rhs = eq.rhs
        if not isinstance(rhs, Post):
            out.append(eq)
            continue
        x = eq.lhs[0]
        dt = types[x]
        gt = "t$%d" % next(fresh)
        g = "t$%d" % next(fresh)
        t = "t$%d" % next(fresh)
        types[gt] = DataType("bool", ())
        types[g] = DataType("bool", ())
        types[t] = dt
        pos = eq.pos
        out.append(Equation([gt], Const(True, pos), pos))
        out.append(Equation(
            [g], Fby(Const(False, pos), Var(gt, pos), True, pos, False), pos))
        out.append(Equation(
            [t], Fby(Const(default_value(dt.kind, dt.shape), pos),
                     rhs.e, True, pos, False), pos))
        out.append(Equation([x], When(Var(t, pos), Var(g, pos), pos), pos))
    return out


# ---- pipeline ----

def normalize(program: Program, main: Optional[str] = None,
              input_types: Optional[Dict[str, DataType]] = None,
              seed: int = 0, for_op: bool = False) -> Normalized:
    """Full lowering pipeline; for_op additionally encodes post."""
    main_name = main or default_main(program)
    check_instantiation_acyclic(program)
    flat, declared = inline(program, main_name)
    fresh = count()
    node = split_expressions(flat, fresh)
    types = infer_types_shapes(node, input_types, declared)
    eqs = materialize_constants(node.eqs, types, seed)
    eqs = lower_initializers(eqs, types, fresh)
    if for_op:
        eqs = rewrite_post(eqs, types, fresh)
    eqs = prune_unreachable(eqs, [p.name for p in node.outputs])
    return Normalized(node.name, node.inputs,
                      [p.name for p in node.outputs], eqs, types)
