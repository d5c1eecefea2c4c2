"""Recursive descent parser for .mlr programs.

Precedence, loosest to tightest:

    fby / fby back (right-assoc), if/then/else
    when (left-assoc)
    or
    and
    comparisons  < <= > >= == !=
    + -
    * /
    unary - , not, post
    indexing e[k]
    atoms

`merge` takes exactly three argument atoms, so anything structured
must be parenthesized, which is how the source figures write it.

One wrinkle: `merge bp (i when bp) (x)` juxtaposes an identifier and
a parenthesized argument, which collides with call syntax `bp(...)`.
Inside merge argument slots an `ident(` is therefore only read as a
call when the identifier names something callable -- a node defined
in the same file (collected by a header pre-scan, so order does not
matter) or a builtin.  Everywhere else `ident(` is always a call.
"""

from typing import List, Optional

from .ast import (Call, Const, Equation, Expr, Fby, If, Index, Merge,
                  NodeDef, Param, Pos, Post, Program, TensorLit, Var, When)
from .lexer import Token, tokenize

KIND_NAMES = ("bool", "int", "num")

CMP_OPS = ("<", "<=", ">", ">=", "==", "!=")

# function-style builtins (operators are tokenized separately)
BUILTIN_FNS = frozenset([
    "zeros", "ones", "glorot_uniform", "orthogonal", "param",
    "sigmoid", "tanh", "relu", "matmul", "concat", "reshape",
])


class ParseError(Exception):
    def __init__(self, pos: Pos, message: str):
        super().__init__("%s: %s" % (pos, message))
        self.pos = pos
        self.message = message


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.toks = tokens
        self.i = 0
        self.callables = set(BUILTIN_FNS)
        for a, b in zip(tokens, tokens[1:]):
            if a.kind == "node" and b.kind == "ident":
                self.callables.add(b.value)

    def peek(self) -> Token:
        return self.toks[self.i]

    def next(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at(self, kind: str) -> bool:
        return self.toks[self.i].kind == kind

    def accept(self, kind: str) -> Optional[Token]:
        if self.at(kind):
            return self.next()
        return None

    def expect(self, kind: str) -> Token:
        t = self.peek()
        if t.kind != kind:
            raise ParseError(t.pos, "expected %r, found %s" % (kind, t))
        return self.next()

    # ---- program structure ----

    def program(self) -> Program:
        nodes = []
        seen = set()
        while not self.at("eof"):
            n = self.node()
            if n.name in seen:
                raise ParseError(n.pos, "duplicate node name %r" % n.name)
            seen.add(n.name)
            nodes.append(n)
        if not nodes:
            raise ParseError(self.peek().pos, "empty program")
        return Program(nodes)

    def node(self) -> NodeDef:
        pos = self.expect("node").pos
        name = self.expect("ident").value
        self.expect("(")
        inputs = self.params()
        self.expect(")")
        self.expect("->")
        self.expect("(")
        outputs = self.params()
        self.expect(")")
        eqs = []
        defined = set(p.name for p in inputs)
        while not self.at("node") and not self.at("eof"):
            eq = self.equation()
            for v in eq.lhs:
                if v == "_":
                    continue
                if v in defined:
                    raise ParseError(eq.pos, "duplicate definition of %r" % v)
                defined.add(v)
            eqs.append(eq)
        return NodeDef(name, inputs, outputs, eqs, pos)

    def params(self) -> List[Param]:
        out = []
        if self.at(")"):
            return out
        out.append(self.param())
        while self.accept(","):
            out.append(self.param())
        return out

    def param(self) -> Param:
        t = self.expect("ident")
        kind = None
        dims = None
        if self.accept(":"):
            kt = self.expect("ident")
            if kt.value not in KIND_NAMES:
                raise ParseError(kt.pos, "unknown kind %r" % kt.value)
            kind = kt.value
            if self.accept("["):
                dims = [self.expect("int").value]
                while self.accept(","):
                    dims.append(self.expect("int").value)
                self.expect("]")
        return Param(t.value, kind, dims, t.pos)

    def equation(self) -> Equation:
        t = self.expect("ident")
        lhs = [t.value]
        while self.accept(","):
            lhs.append(self.expect("ident").value)
        dup = [v for v in set(lhs) if v != "_" and lhs.count(v) > 1]
        if dup:
            raise ParseError(t.pos, "duplicate lhs name %r" % dup[0])
        self.expect("=")
        rhs = self.expr()
        self.expect(";")
        return Equation(lhs, rhs, t.pos)

    # ---- expressions ----

    def expr(self) -> Expr:
        return self.fby_expr()

    def fby_expr(self) -> Expr:
        left = self.when_expr()
        t = self.accept("fby")
        if t:
            back = self.accept("back") is not None
            right = self.fby_expr()
            return Fby(left, right, back, t.pos)
        return left

    def when_expr(self) -> Expr:
        e = self.or_expr()
        while True:
            t = self.accept("when")
            if not t:
                return e
            e = When(e, self.or_expr(), t.pos)

    def or_expr(self) -> Expr:
        e = self.and_expr()
        while self.at("or"):
            t = self.next()
            e = Call("or", [e, self.and_expr()], t.pos)
        return e

    def and_expr(self) -> Expr:
        e = self.cmp_expr()
        while self.at("and"):
            t = self.next()
            e = Call("and", [e, self.cmp_expr()], t.pos)
        return e

    def cmp_expr(self) -> Expr:
        e = self.add_expr()
        while self.peek().kind in CMP_OPS:
            t = self.next()
            e = Call(t.kind, [e, self.add_expr()], t.pos)
        return e

    def add_expr(self) -> Expr:
        e = self.mul_expr()
        while self.peek().kind in ("+", "-"):
            t = self.next()
            e = Call(t.kind, [e, self.mul_expr()], t.pos)
        return e

    def mul_expr(self) -> Expr:
        e = self.unary_expr()
        while self.peek().kind in ("*", "/"):
            t = self.next()
            e = Call(t.kind, [e, self.unary_expr()], t.pos)
        return e

    def unary_expr(self) -> Expr:
        t = self.peek()
        if t.kind == "-":
            self.next()
            arg = self.unary_expr()
            if isinstance(arg, Const) and not isinstance(arg.value, bool) \
                    and isinstance(arg.value, (int, float)):
                return Const(-arg.value, t.pos)
            return Call("u-", [arg], t.pos)
        if t.kind == "not":
            self.next()
            return Call("not", [self.unary_expr()], t.pos)
        if t.kind == "post":
            self.next()
            return Post(self.unary_expr(), t.pos)
        return self.postfix_expr()

    def postfix_expr(self, restricted: bool = False) -> Expr:
        e = self.atom(restricted)
        while self.at("["):
            t = self.next()
            k = self.expect("int")
            self.expect("]")
            e = Index(e, k.value, t.pos)
        return e

    def atom(self, restricted: bool = False) -> Expr:
        t = self.peek()
        if t.kind == "int" or t.kind == "float" or t.kind == "bool":
            self.next()
            return Const(t.value, t.pos)
        if t.kind == "ident":
            self.next()
            if self.at("(") and (not restricted or t.value in self.callables):
                self.next()
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                self.expect(")")
                return Call(t.value, args, t.pos)
            return Var(t.value, t.pos)
        if t.kind == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "[":
            self.next()
            elems = []
            if not self.at("]"):
                elems.append(self.expr())
                while self.accept(","):
                    elems.append(self.expr())
            self.expect("]")
            return TensorLit(elems, t.pos)
        if t.kind == "if":
            self.next()
            cond = self.expr()
            self.expect("then")
            on_true = self.expr()
            self.expect("else")
            on_false = self.expr()
            return If(cond, on_true, on_false, t.pos)
        if t.kind == "merge":
            self.next()
            cond = self.postfix_expr(restricted=True)
            on_true = self.postfix_expr(restricted=True)
            on_false = self.postfix_expr(restricted=True)
            return Merge(cond, on_true, on_false, t.pos)
        raise ParseError(t.pos, "expected an expression, found %s" % t)


def parse(source: str) -> Program:
    """Parse .mlr source text into a Program."""
    return _Parser(tokenize(source)).program()


def parse_expr(source: str) -> Expr:
    """Parse a single expression; used by tests."""
    p = _Parser(tokenize(source))
    e = p.expr()
    p.expect("eof")
    return e
