"""Static analysis: instantiation acyclicity and type/shape inference.

Every stream variable carries a DataType, a scalar kind (bool, int,
num) plus a tensor shape (the empty shape is a scalar).  Inference
runs on a flat node (after inlining), because tensor shapes flow
through node arguments as ordinary values: `dense1(4 * units, ...)`
only has a checkable shape once `units` is bound per instance.

Numeric literals are kind-flexible: `0` can serve as an int or as a
num depending on what it meets, and defaults to int when nothing
constrains it.  Declared kinds and builtin signatures are rigid, so
an int stream never silently unifies with a num stream; arithmetic
is the one place ints promote to num.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .ast import (Call, Const, Equation, Fby, If, Index, Merge, NodeDef,
                  Pos, Post, Program, TensorLit, Var, When, walk_exprs)

KINDS = ("bool", "int", "num")

ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("<", "<=", ">", ">=", "==", "!=")
BOOL_OPS = ("and", "or")

# builtins whose first argument is a static shape
SHAPED_SOURCES = ("zeros", "ones", "glorot_uniform", "orthogonal")

POINTWISE_NUM = ("sigmoid", "tanh", "relu")


class StaticError(Exception):
    """A well-formedness, type, or shape error; rendered with location."""

    def __init__(self, pos: Pos, message: str):
        super().__init__("%s: %s" % (pos, message))
        self.pos = pos
        self.message = message


@dataclass(frozen=True)
class DataType:
    kind: str
    shape: Tuple[int, ...] = ()

    def __str__(self) -> str:
        if self.shape:
            return "%s [%s]" % (self.kind, ",".join(str(d) for d in self.shape))
        return self.kind


# ---- instantiation graph ----

def check_instantiation_acyclic(program: Program) -> None:
    """Raise StaticError if any node directly or indirectly instantiates itself."""
    node_names = set(program.node_names())
    callees: Dict[str, List[Tuple[str, Pos]]] = {}
    for n in program.nodes:
        out = []
        for eq in n.eqs:
            for e in walk_exprs(eq.rhs):
                if isinstance(e, Call) and e.fn in node_names:
                    out.append((e.fn, e.pos))
        callees[n.name] = out

    state: Dict[str, int] = {}   # 0 visiting, 1 done
    stack: List[str] = []

    def visit(name: str, pos: Pos):
        if state.get(name) == 1:
            return
        if state.get(name) == 0:
            chain = stack[stack.index(name):] + [name]
            raise StaticError(pos, "instantiation cycle: %s" % " -> ".join(chain))
        state[name] = 0
        stack.append(name)
        for callee, cpos in callees[name]:
            visit(callee, cpos)
        stack.pop()
        state[name] = 1

    for n in program.nodes:
        visit(n.name, n.pos)


# ---- static shape arguments ----

def static_value(e, defs: Dict[str, object], _depth: int = 0):
    """Evaluate an expression to an int or a shape tuple, or return None.

    Resolves variables through their defining equations, so shapes can
    be threaded through inlined node arguments.  Only constants, tensor
    literals of ints, and integer arithmetic are considered static.
    """
    if _depth > 64:
        return None
    if isinstance(e, Const):
        if isinstance(e.value, bool) or not isinstance(e.value, int):
            return None
        return e.value
    if isinstance(e, TensorLit):
        dims = []
        for elem in e.elems:
            v = static_value(elem, defs, _depth + 1)
            if not isinstance(v, int):
                return None
            dims.append(v)
        return tuple(dims)
    if isinstance(e, Var):
        rhs = defs.get(e.name)
        if rhs is None:
            return None
        return static_value(rhs, defs, _depth + 1)
    if isinstance(e, Call) and e.fn in ("+", "-", "*", "/") and len(e.args) == 2:
        a = static_value(e.args[0], defs, _depth + 1)
        b = static_value(e.args[1], defs, _depth + 1)
        if isinstance(a, int) and isinstance(b, int):
            if e.fn == "+":
                return a + b
            if e.fn == "-":
                return a - b
            if e.fn == "*":
                return a * b
            return a // b if b != 0 else None
    return None


def static_shape(e, defs) -> Optional[Tuple[int, ...]]:
    v = static_value(e, defs)
    return v if isinstance(v, tuple) else None


# ---- inference over a flat node ----

_FLEX = "flex"   # numeric literal, not yet committed to int or num


def _unify_kind(a: Optional[str], b: Optional[str], pos: Pos) -> Optional[str]:
    if a is None:
        return b
    if b is None:
        return a
    if a == b:
        return a
    if _FLEX in (a, b):
        other = b if a == _FLEX else a
        if other in ("int", "num"):
            return other
        raise StaticError(pos, "type mismatch: numeric literal vs bool")
    raise StaticError(pos, "type mismatch: %s vs %s" % (a, b))


def _unify_shape(a, b, pos: Pos):
    if a is None:
        return b
    if b is None:
        return a
    if a != b:
        raise StaticError(pos, "shape mismatch: %s vs %s" % (list(a), list(b)))
    return a


def _numeric(kind: str, pos: Pos, what: str):
    if kind is not None and kind not in ("int", "num", _FLEX):
        raise StaticError(pos, "%s requires a numeric operand, got %s" % (what, kind))


def _broadcast(sa, sb, pos: Pos):
    """Pointwise shape rule: equal shapes, or a scalar against anything.

    With one side unknown the result is only committed when the known
    side is non-scalar (then the result is that shape either way).
    """
    if sa is None and sb is None:
        return None
    if sa is None:
        return sb if sb != () else None
    if sb is None:
        return sa if sa != () else None
    if sa == ():
        return sb
    if sb == ():
        return sa
    if sa != sb:
        raise StaticError(pos, "shape mismatch: %s vs %s" % (list(sa), list(sb)))
    return sa


class _Infer:
    def __init__(self, node: NodeDef, input_types: Dict[str, DataType],
                 declared: Dict[str, DataType]):
        self.node = node
        self.defs: Dict[str, object] = {}
        for eq in node.eqs:
            if len(eq.lhs) != 1:
                raise StaticError(eq.pos, "multi-output equation survived inlining")
            if eq.lhs[0] != "_":
                self.defs[eq.lhs[0]] = eq.rhs

        self.kind: Dict[str, Optional[str]] = {}
        self.shape: Dict[str, Optional[Tuple[int, ...]]] = {}
        self.pos: Dict[str, Pos] = {}

        names = set(self.defs)
        for p in node.inputs:
            names.add(p.name)
        for p in node.inputs + node.outputs:
            self.pos[p.name] = p.pos
            k, s = None, None
            if p.kind is not None:
                k = p.kind
                s = tuple(p.dims) if p.dims is not None else ()
            t = input_types.get(p.name) or declared.get(p.name)
            if t is not None:
                k = _unify_kind(k, t.kind, p.pos)
                s = _unify_shape(s, t.shape, p.pos)
            if k is not None:
                self.kind[p.name] = k
                self.shape[p.name] = s
        for v, t in declared.items():
            if v not in self.kind:
                self.kind[v] = t.kind
                self.shape[v] = t.shape
        for p in node.inputs:
            if p.name not in self.kind:
                raise StaticError(p.pos, "input %r needs a type: annotate it or "
                                         "provide an input trace" % p.name)
        for p in node.outputs:
            if p.name not in names:
                raise StaticError(p.pos, "output %r has no defining equation" % p.name)
        for eq in node.eqs:
            for e in walk_exprs(eq.rhs):
                if isinstance(e, Var) and e.name not in names:
                    raise StaticError(e.pos, "undeclared variable %r" % e.name)
        self.names = names
        self.changed = False
        self.strict = False

    # -- state helpers --

    def _get(self, v: str):
        return self.kind.get(v), self.shape.get(v)

    def _set(self, v: str, kind, shape, pos: Pos):
        k = _unify_kind(self.kind.get(v), kind, pos)
        s = _unify_shape(self.shape.get(v), shape, pos)
        if k != self.kind.get(v) or s != self.shape.get(v):
            self.changed = True
        self.kind[v] = k
        self.shape[v] = s

    def _require(self, kind, shape, pos: Pos, what: str):
        if self.strict and (kind is None or shape is None):
            raise StaticError(pos, "cannot infer the type of %s" % what)

    # -- expression typing; expect pushes exact constraints into bare vars --

    def visit(self, e, ek=None, es=None):
        if isinstance(e, Const):
            if isinstance(e.value, bool):
                return "bool", ()
            if isinstance(e.value, int):
                k = _unify_kind(_FLEX, ek, e.pos) if ek else _FLEX
                return k, ()
            return "num", ()

        if isinstance(e, Var):
            if ek is not None or es is not None:
                self._set(e.name, ek, es, e.pos)
            return self._get(e.name)

        if isinstance(e, When):
            ck, cs = self.visit(e.cond)
            self._check_cond(ck, cs, e.cond.pos, "when")
            return self.visit(e.e, ek, es)

        if isinstance(e, Merge):
            ck, cs = self.visit(e.cond)
            self._check_cond(ck, cs, e.cond.pos, "merge")
            return self._join_arms(e.on_true, e.on_false, ek, es, e.pos)

        if isinstance(e, If):
            ck, cs = self.visit(e.cond)
            self._check_cond(ck, cs, e.cond.pos, "if")
            return self._join_arms(e.on_true, e.on_false, ek, es, e.pos)

        if isinstance(e, Fby):
            k, s = self._join_arms(e.init, e.body, ek, es, e.pos)
            return k, s

        if isinstance(e, Post):
            return self.visit(e.e, ek, es)

        if isinstance(e, TensorLit):
            k = None
            for elem in e.elems:
                kk, ss = self.visit(elem)
                k = _unify_kind(k, kk, elem.pos)
                _unify_shape((), ss, elem.pos)
            if not e.elems:
                return "int", (0,)
            self._require(k, (), e.pos, "a tensor literal")
            return k, (len(e.elems),)

        if isinstance(e, Index):
            k, s = self.visit(e.e)
            if s is not None:
                if len(s) == 0:
                    raise StaticError(e.pos, "cannot index a scalar")
                if not (0 <= e.k < s[0]):
                    raise StaticError(e.pos, "index %d out of range for shape %s"
                                      % (e.k, list(s)))
                return k, s[1:]
            self._require(k, s, e.pos, "an indexed value")
            return k, None

        if isinstance(e, Call):
            return self._call(e, ek, es)

        raise StaticError(e.pos, "unexpected expression form %r" % type(e).__name__)

    def _check_cond(self, k, s, pos, what):
        if k is not None and k != "bool":
            raise StaticError(pos, "%s condition must be bool, got %s" % (what, k))
        if s is not None and s != ():
            raise StaticError(pos, "%s condition must be a scalar" % what)
        self._require(k, s, pos, "a %s condition" % what)

    def _join_arms(self, a, b, ek, es, pos):
        """Exact unification of two expressions that must share a type."""
        ka, sa = self.visit(a, ek, es)
        kb, sb = self.visit(b, _unify_kind(ek, ka, pos), _unify_shape(es, sa, pos))
        k = _unify_kind(ka, kb, pos)
        s = _unify_shape(sa, sb, pos)
        if k is not None and isinstance(a, Var):
            self._set(a.name, k, s, pos)
        if k is not None and isinstance(b, Var):
            self._set(b.name, k, s, pos)
        self._require(k, s, pos, "both branches")
        return k, s

    def _call(self, e: Call, ek, es):
        fn = e.fn

        if fn in ARITH_OPS:
            ka, sa = self.visit(e.args[0])
            kb, sb = self.visit(e.args[1])
            _numeric(ka, e.args[0].pos, "%r" % fn)
            _numeric(kb, e.args[1].pos, "%r" % fn)
            s = _broadcast(sa, sb, e.pos)
            if ka is None or kb is None:
                # a known num forces num; a flexible literal keeps the
                # result flexible, which lets recurrences through post
                # settle (`o = post u; u = o + 1`) without annotations
                if "num" in (ka, kb):
                    return "num", s
                if _FLEX in (ka, kb):
                    return _FLEX, s
                return None, s
            if "num" in (ka, kb):
                return "num", s
            if "int" in (ka, kb):
                return "int", s
            return _FLEX, s

        if fn in CMP_OPS:
            ka, sa = self.visit(e.args[0])
            kb, sb = self.visit(e.args[1])
            if "bool" in (ka, kb):
                if fn not in ("==", "!="):
                    raise StaticError(e.pos, "%r needs numeric operands" % fn)
                _unify_kind(ka, kb, e.pos)
            else:
                _numeric(ka, e.args[0].pos, "%r" % fn)
                _numeric(kb, e.args[1].pos, "%r" % fn)
            return "bool", _broadcast(sa, sb, e.pos)

        if fn in BOOL_OPS:
            ka, sa = self.visit(e.args[0], "bool", None)
            kb, sb = self.visit(e.args[1], "bool", None)
            for k, a in ((ka, e.args[0]), (kb, e.args[1])):
                if k is not None and k != "bool":
                    raise StaticError(a.pos, "%r needs bool operands" % fn)
            return "bool", _broadcast(sa, sb, e.pos)

        if fn == "not":
            k, s = self.visit(e.args[0], "bool", None)
            if k is not None and k != "bool":
                raise StaticError(e.pos, "'not' needs a bool operand")
            return "bool", s

        if fn == "u-":
            k, s = self.visit(e.args[0])
            _numeric(k, e.pos, "unary minus")
            return k, s

        if fn in SHAPED_SOURCES:
            self._arity(e, 1)
            self.visit(e.args[0])
            shape = static_shape(e.args[0], self.defs)
            if shape is None:
                raise StaticError(e.pos, "%s needs a static shape argument" % fn)
            return "num", shape

        if fn in POINTWISE_NUM:
            self._arity(e, 1)
            k, s = self.visit(e.args[0])
            _numeric(k, e.pos, fn)
            return "num", s

        if fn == "param":
            self._arity(e, 1)
            return self.visit(e.args[0], ek, es)

        if fn == "matmul":
            self._arity(e, 2)
            ka, sa = self.visit(e.args[0])
            kb, sb = self.visit(e.args[1])
            _numeric(ka, e.args[0].pos, "matmul")
            _numeric(kb, e.args[1].pos, "matmul")
            if sa is None or sb is None:
                self._require(None, None, e.pos, "matmul operands")
                return "num", None
            if len(sa) != 2 or len(sb) not in (1, 2) or sa[1] != sb[0]:
                raise StaticError(e.pos, "matmul shape mismatch: %s x %s"
                                  % (list(sa), list(sb)))
            return "num", (sa[0],) if len(sb) == 1 else (sa[0], sb[1])

        if fn == "concat":
            self._arity(e, 2)
            ka, sa = self.visit(e.args[0])
            kb, sb = self.visit(e.args[1])
            k = _unify_kind(ka, kb, e.pos)
            if sa is None or sb is None:
                return k, None
            if len(sa) != len(sb) or len(sa) == 0 or sa[1:] != sb[1:]:
                raise StaticError(e.pos, "concat shape mismatch: %s vs %s"
                                  % (list(sa), list(sb)))
            return k, (sa[0] + sb[0],) + sa[1:]

        if fn == "reshape":
            self._arity(e, 2)
            self.visit(e.args[0])
            shape = static_shape(e.args[0], self.defs)
            if shape is None:
                raise StaticError(e.pos, "reshape needs a static shape argument")
            k, s = self.visit(e.args[1])
            if s is not None:
                have = 1
                for d in s:
                    have *= d
                want = 1
                for d in shape:
                    want *= d
                if have != want:
                    raise StaticError(e.pos, "reshape cannot turn %s into %s"
                                      % (list(s), list(shape)))
            return k, shape

        raise StaticError(e.pos, "unknown builtin or node %r" % fn)

    def _arity(self, e: Call, n: int):
        if len(e.args) != n:
            raise StaticError(e.pos, "%s expects %d argument%s, got %d"
                              % (e.fn, n, "" if n == 1 else "s", len(e.args)))

    # -- driver --

    def run(self) -> Dict[str, DataType]:
        for _ in range(len(self.names) * 3 + 8):
            self.changed = False
            for eq in self.node.eqs:
                v = eq.lhs[0]
                ek, es = (None, None) if v == "_" else self._get(v)
                k, s = self.visit(eq.rhs, ek, es)
                if v != "_":
                    self._set(v, k, s, eq.pos)
            if not self.changed:
                break

        # defaults: uncommitted literals become int, untouched shapes scalar
        for v in self.names:
            if self.kind.get(v) == _FLEX:
                self.kind[v] = "int"
            if self.kind.get(v) is not None and self.shape.get(v) is None:
                self.shape[v] = ()

        # strict pass: everything must now resolve and check
        self.strict = True
        out: Dict[str, DataType] = {}
        for eq in self.node.eqs:
            v = eq.lhs[0]
            ek, es = (None, None) if v == "_" else self._get(v)
            k, s = self.visit(eq.rhs, ek, es)
            if k == _FLEX:
                k = "int"
            if v != "_" and (k is None or s is None):
                raise StaticError(eq.pos, "cannot infer the type of %r" % v)
        for v in sorted(self.names):
            k, s = self.kind.get(v), self.shape.get(v)
            if k is None or s is None:
                pos = self.pos.get(v, Pos())
                raise StaticError(pos, "cannot infer the type of %r" % v)
            if k == _FLEX:
                k = "int"
            out[v] = DataType(k, s)
        return out


def infer_types_shapes(node: NodeDef,
                       input_types: Optional[Dict[str, DataType]] = None,
                       declared: Optional[Dict[str, DataType]] = None
                       ) -> Dict[str, DataType]:
    """Infer a DataType for every variable of a flat node.

    input_types supplies kinds for unannotated inputs (e.g. derived
    from an input trace); declared carries annotations collected from
    inner nodes during inlining.  Deterministic: a pure function of
    its arguments.
    """
    return _Infer(node, input_types or {}, declared or {}).run()
