"""Abstract syntax for mlr programs.

A program is a list of nodes.  Each node has input and output
parameter lists (optionally annotated with a kind and tensor dims)
and a body made of multi-assignment equations over expressions.

Expression forms cover the reactive primitives (fby, fby back, post,
when, merge), function/node application, tensor literals, constant
indexing, and an if/then/else conditional.  Operator syntax such as
`a + b` or `not a` is represented as a Call whose fn is the operator
symbol itself ('+', 'not', 'u-', ...); those names are not legal
identifiers, so they can never collide with a user node name.

Source positions are carried on every piece of syntax but excluded
from equality, so structural comparison survives a print/parse
round-trip.
"""

from dataclasses import dataclass, field
from typing import List, Optional


@dataclass
class Pos:
    line: int = 0
    col: int = 0

    def __str__(self) -> str:
        return "%d:%d" % (self.line, self.col)


def _pos_field():
    return field(default_factory=Pos, compare=False, repr=False)


class Expr:
    """Base class of all expression variants."""

    pos: Pos


@dataclass
class Const(Expr):
    """Literal constant: bool, int, or float (num)."""

    value: object
    pos: Pos = _pos_field()


@dataclass
class Var(Expr):
    name: str
    pos: Pos = _pos_field()


@dataclass
class Call(Expr):
    """Application of a builtin or instantiation of a node.

    Which of the two it is gets decided later, by looking the name up
    in the program; the parser cannot tell them apart.
    """

    fn: str
    args: List[Expr]
    pos: Pos = _pos_field()


@dataclass
class When(Expr):
    e: Expr
    cond: Expr
    pos: Pos = _pos_field()


@dataclass
class Merge(Expr):
    cond: Expr
    on_true: Expr
    on_false: Expr
    pos: Pos = _pos_field()


@dataclass
class Fby(Expr):
    """`init fby body`, or `init fby back body` when back is set.

    inits=False marks a recurrence whose initializer never fires; the
    post rewrite emits these, since post has no initializer to carry
    across the final cycle.  Surface syntax always has inits=True.
    """

    init: Expr
    body: Expr
    back: bool = False
    pos: Pos = _pos_field()
    inits: bool = True


@dataclass
class Post(Expr):
    e: Expr
    pos: Pos = _pos_field()


@dataclass
class If(Expr):
    cond: Expr
    on_true: Expr
    on_false: Expr
    pos: Pos = _pos_field()


@dataclass
class TensorLit(Expr):
    elems: List[Expr]
    pos: Pos = _pos_field()


@dataclass
class Index(Expr):
    """Constant row indexing, `e[k]` with a literal integer k."""

    e: Expr
    k: int
    pos: Pos = _pos_field()


@dataclass
class Param:
    name: str
    kind: Optional[str] = None          # 'bool' | 'int' | 'num' | None
    dims: Optional[List[int]] = None    # tensor dims, only with a kind
    pos: Pos = _pos_field()


@dataclass
class Equation:
    """`x, y, _ = e;` -- wildcard targets keep the name '_'."""

    lhs: List[str]
    rhs: Expr
    pos: Pos = _pos_field()


@dataclass
class NodeDef:
    name: str
    inputs: List[Param]
    outputs: List[Param]
    eqs: List[Equation]
    pos: Pos = _pos_field()


@dataclass
class Program:
    nodes: List[NodeDef]

    def node(self, name: str) -> Optional[NodeDef]:
        for n in self.nodes:
            if n.name == name:
                return n
        return None

    def node_names(self) -> List[str]:
        return [n.name for n in self.nodes]


def walk_exprs(e: Expr):
    """Yield e and every sub-expression, depth first."""
    yield e
    if isinstance(e, Call):
        for a in e.args:
            yield from walk_exprs(a)
    elif isinstance(e, When):
        yield from walk_exprs(e.e)
        yield from walk_exprs(e.cond)
    elif isinstance(e, (Merge, If)):
        yield from walk_exprs(e.cond)
        yield from walk_exprs(e.on_true)
        yield from walk_exprs(e.on_false)
    elif isinstance(e, Fby):
        yield from walk_exprs(e.init)
        yield from walk_exprs(e.body)
    elif isinstance(e, Post):
        yield from walk_exprs(e.e)
    elif isinstance(e, TensorLit):
        for a in e.elems:
            yield from walk_exprs(a)
    elif isinstance(e, Index):
        yield from walk_exprs(e.e)
