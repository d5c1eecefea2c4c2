"""Canonical pretty-printer for mlr syntax trees.

Printing is precedence driven: a child is parenthesized exactly when
its own binding strength is below what its position requires, so
`parse(print(p)) == p` and printing is idempotent.
"""

from .ast import (Call, Const, Equation, Expr, Fby, If, Index, Merge,
                  NodeDef, Param, Post, Program, TensorLit, Var, When)

# binding strength of each printed form
_P_FBY = 1      # also if/then/else
_P_WHEN = 2
_P_OR = 3
_P_AND = 4
_P_CMP = 5
_P_ADD = 6
_P_MUL = 7
_P_UNARY = 8    # also merge, whose last argument is swallowed by tighter contexts
_P_INDEX = 9
_P_ATOM = 10

_BINOP_PREC = {
    "or": _P_OR, "and": _P_AND,
    "<": _P_CMP, "<=": _P_CMP, ">": _P_CMP, ">=": _P_CMP,
    "==": _P_CMP, "!=": _P_CMP,
    "+": _P_ADD, "-": _P_ADD, "*": _P_MUL, "/": _P_MUL,
}


def _prec(e: Expr) -> int:
    if isinstance(e, (Fby, If)):
        return _P_FBY
    if isinstance(e, When):
        return _P_WHEN
    if isinstance(e, Call):
        if e.fn in _BINOP_PREC:
            return _BINOP_PREC[e.fn]
        if e.fn in ("u-", "not"):
            return _P_UNARY
        return _P_ATOM
    if isinstance(e, Post):
        return _P_UNARY
    if isinstance(e, Merge):
        return _P_UNARY
    if isinstance(e, Index):
        return _P_INDEX
    if isinstance(e, Const):
        v = e.value
        if not isinstance(v, bool) and isinstance(v, (int, float)) and v < 0:
            return _P_UNARY   # prints with a leading minus
    return _P_ATOM


def format_const(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_expr(e: Expr, need: int = 0) -> str:
    s = _format(e)
    if _prec(e) < need:
        return "(" + s + ")"
    return s


def _format(e: Expr) -> str:
    if isinstance(e, Const):
        return format_const(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        if e.fn in _BINOP_PREC:
            p = _BINOP_PREC[e.fn]
            return "%s %s %s" % (format_expr(e.args[0], p), e.fn,
                                 format_expr(e.args[1], p + 1))
        if e.fn == "u-":
            return "-" + format_expr(e.args[0], _P_UNARY)
        if e.fn == "not":
            return "not " + format_expr(e.args[0], _P_UNARY)
        return "%s(%s)" % (e.fn, ", ".join(format_expr(a) for a in e.args))
    if isinstance(e, When):
        return "%s when %s" % (format_expr(e.e, _P_WHEN),
                               format_expr(e.cond, _P_WHEN + 1))
    if isinstance(e, Merge):
        return "merge %s %s %s" % (format_expr(e.cond, _P_INDEX),
                                   format_expr(e.on_true, _P_INDEX),
                                   format_expr(e.on_false, _P_INDEX))
    if isinstance(e, Fby):
        op = "fby back" if e.back else "fby"
        return "%s %s %s" % (format_expr(e.init, _P_FBY + 1), op,
                             format_expr(e.body, _P_FBY))
    if isinstance(e, Post):
        return "post " + format_expr(e.e, _P_UNARY)
    if isinstance(e, If):
        return "if %s then %s else %s" % (format_expr(e.cond),
                                          format_expr(e.on_true),
                                          format_expr(e.on_false))
    if isinstance(e, TensorLit):
        return "[%s]" % ", ".join(format_expr(a) for a in e.elems)
    if isinstance(e, Index):
        return "%s[%d]" % (format_expr(e.e, _P_INDEX), e.k)
    raise TypeError("unknown expression %r" % (e,))


def format_param(p: Param) -> str:
    s = p.name
    if p.kind is not None:
        s += ":" + p.kind
        if p.dims is not None:
            s += " [%s]" % ",".join(str(d) for d in p.dims)
    return s


def format_equation(eq: Equation) -> str:
    return "%s = %s;" % (", ".join(eq.lhs), format_expr(eq.rhs))


def format_node(n: NodeDef) -> str:
    lines = ["node %s(%s)->(%s)" % (
        n.name,
        ", ".join(format_param(p) for p in n.inputs),
        ", ".join(format_param(p) for p in n.outputs))]
    for eq in n.eqs:
        lines.append("  " + format_equation(eq))
    return "\n".join(lines)


def format_program(p: Program) -> str:
    return "\n\n".join(format_node(n) for n in p.nodes) + "\n"
