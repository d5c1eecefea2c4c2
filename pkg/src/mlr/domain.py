"""Semantic value lattice shared by both evaluators.

Every stream cell holds an ExtVal:

    Bot     (.)  no information yet
    Pending (?)  demanded / in flight, value not yet known (operational only)
    Absent  (_)  provably no value this cycle
    Known v      a scalar or tensor payload
    Err     (!)  synchronization error

Order:  Bot < Pending < Known v < Err   and   Bot < Absent < Err.
Absent is incomparable with Pending and with every Known; two Known cells
with different payloads are incomparable, so their join is Err.

Payload equality is exact and bitwise: floats compare by their IEEE-754
bits (so nan == nan here, and re-deriving the same cell never manufactures
a spurious conflict), tensors by dtype, shape and raw buffer. Numeric
tolerance belongs to test assertions, never to the lattice.
"""

from __future__ import annotations

import struct
from typing import Any, Dict, Iterable, Mapping, Tuple

import numpy as np

# lattice tags (identifiers, not the order itself)
_BOT, _PENDING, _ABSENT, _KNOWN, _ERR = range(5)

_TAG_SYMBOL = {_BOT: ".", _PENDING: "?", _ABSENT: "_", _ERR: "!"}


class ExtVal:
    __slots__ = ("tag", "value")

    def __init__(self, tag: int, value: Any = None):
        self.tag = tag
        self.value = value

    # -- predicates ---------------------------------------------------
    @property
    def is_known(self) -> bool:
        return self.tag == _KNOWN

    @property
    def is_decided(self) -> bool:
        """Known or Absent: the cell's presence question is settled."""
        return self.tag in (_KNOWN, _ABSENT)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExtVal):
            return NotImplemented
        if self.tag != other.tag:
            return False
        if self.tag != _KNOWN:
            return True
        return values_equal(self.value, other.value)

    def __hash__(self) -> int:
        return hash(self.tag)

    def __repr__(self) -> str:
        if self.tag == _KNOWN:
            return f"Known({self.value!r})"
        return {_BOT: "Bot", _PENDING: "Pending", _ABSENT: "Absent", _ERR: "Err"}[self.tag]


BOT = ExtVal(_BOT)
PENDING = ExtVal(_PENDING)
ABSENT = ExtVal(_ABSENT)
ERR = ExtVal(_ERR)

# re-export tag codes for the evaluators' dispatch tables
TAG_BOT, TAG_PENDING, TAG_ABSENT, TAG_KNOWN, TAG_ERR = (
    _BOT, _PENDING, _ABSENT, _KNOWN, _ERR)


def known(v: Any) -> ExtVal:
    return ExtVal(_KNOWN, v)


def values_equal(x: Any, y: Any) -> bool:
    """Exact payload equality. Bitwise on floats and tensors."""
    if isinstance(x, np.ndarray) or isinstance(y, np.ndarray):
        if not (isinstance(x, np.ndarray) and isinstance(y, np.ndarray)):
            return False
        return (x.dtype == y.dtype and x.shape == y.shape
                and x.tobytes() == y.tobytes())
    if type(x) is not type(y):  # keeps bool apart from int
        return False
    if isinstance(x, float):
        return struct.pack("<d", x) == struct.pack("<d", y)
    return x == y


def join(a: ExtVal, b: ExtVal) -> ExtVal:
    """Least upper bound; total, with Err absorbing conflicts."""
    if a is b:
        return a
    ta, tb = a.tag, b.tag
    if ta == _BOT:
        return b
    if tb == _BOT:
        return a
    if ta == _ERR or tb == _ERR:
        return ERR
    if ta == _PENDING:
        return b if tb != _ABSENT else ERR
    if tb == _PENDING:
        return a if ta != _ABSENT else ERR
    if ta == _ABSENT and tb == _ABSENT:
        return ABSENT
    if ta == _ABSENT or tb == _ABSENT:
        return ERR
    # both Known
    return a if values_equal(a.value, b.value) else ERR


def leq(a: ExtVal, b: ExtVal) -> bool:
    """a <= b in the lattice order."""
    if a is b or a.tag == _BOT or b.tag == _ERR:
        return True
    if a.tag == _PENDING:
        return b.tag in (_PENDING, _KNOWN)
    if a.tag == _ABSENT:
        return b.tag == _ABSENT
    if a.tag == _KNOWN:
        return b.tag == _KNOWN and values_equal(a.value, b.value)
    return False  # a is Err, b is not


def nv(x: ExtVal) -> ExtVal:
    """Strip the payload: Known v -> Pending, everything else unchanged.

    The join of nv over an equation's variables is the equation's
    synchronization status.
    """
    return PENDING if x.tag == _KNOWN else x


VarState = Dict[str, ExtVal]


def cerr(s: Mapping[str, ExtVal]) -> VarState:
    """Error containment: one Err component poisons the whole state."""
    if any(v.tag == _ERR for v in s.values()):
        return {k: ERR for k in s}
    return dict(s)


def update(s: Mapping[str, ExtVal], bindings: Mapping[str, ExtVal]) -> VarState:
    """Pointwise join of bindings into s; never loses information."""
    out = dict(s)
    for k, v in bindings.items():
        out[k] = join(out.get(k, BOT), v)
    return out


def state_leq(a: Mapping[str, ExtVal], b: Mapping[str, ExtVal]) -> bool:
    keys = set(a) | set(b)
    return all(leq(a.get(k, BOT), b.get(k, BOT)) for k in keys)


def render_cell(v: ExtVal) -> str:
    """Chronogram cell text: `.` Bot, `?` Pending, `_` Absent, `!` Err,
    payload text otherwise (bools as true/false, floats round-trip exact,
    tensors as dims 'x'-joined then `;`-separated elements)."""
    if v.tag != _KNOWN:
        return _TAG_SYMBOL[v.tag]
    return render_value(v.value)


def render_value(x: Any) -> str:
    if isinstance(x, np.ndarray):
        dims = "x".join(str(d) for d in x.shape)
        elems = ";".join(render_value(e) for e in x.reshape(-1).tolist())
        return f"t[{dims}]:{elems}"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        s = repr(float(x))  # shortest digits that round-trip exactly
        if "." not in s and "e" not in s and "inf" not in s and "nan" not in s:
            s += ".0"  # keep floats visibly floats so parsing round-trips
        return s
    return str(x)


def parse_cell(text: str) -> ExtVal:
    """Inverse of render_cell for scalar and tensor payloads."""
    t = text.strip()
    if t == ".":
        return BOT
    if t == "?":
        return PENDING
    if t == "_":
        return ABSENT
    if t == "!":
        return ERR
    return known(parse_value(t))


def parse_value(t: str) -> Any:
    if t.startswith("t["):
        head, _, body = t.partition(":")
        dims = head[2:-1]
        shape = tuple(int(d) for d in dims.split("x")) if dims else ()
        elems = [parse_value(e) for e in body.split(";")] if body else []
        if not elems:
            # empty tensors carry no element to infer from; they only arise
            # from the [] literal, whose kind is int
            arr = np.array([], dtype=np.int64)
        elif isinstance(elems[0], bool):
            arr = np.array(elems, dtype=np.bool_)
        elif isinstance(elems[0], int):
            arr = np.array(elems, dtype=np.int64)
        else:
            arr = np.array(elems, dtype=np.float64)
        return arr.reshape(shape)
    if t == "true":
        return True
    if t == "false":
        return False
    try:
        return int(t)
    except ValueError:
        return float(t)
