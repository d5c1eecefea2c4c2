"""Runtime value operations and seeded initializers.

Payloads are python bools, ints, floats, and numpy arrays.  apply_op
computes one builtin application over already-present payloads; it
raises EvalError for runtime failures (integer division by zero, an
out-of-range reshape), which evaluators turn into the error value.
Float arithmetic follows IEEE (inf and nan are ordinary payloads).

Initializer draws are referentially transparent: each draw is keyed
by the global seed and the name of the equation it initializes, via
a splitmix64-derived substream.  Evaluation order, scheduling, and
the choice of evaluator therefore cannot change a drawn value.
"""

import math

import numpy as np


class EvalError(Exception):
    """A runtime error inside a builtin; becomes the error value."""


# ---- keyed randomness ----

_MASK = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_key(seed: int, name: str, cycle: int = -1) -> int:
    """Mix a global seed, an equation identity, and optionally a cycle."""
    h = _splitmix64(seed & _MASK)
    for b in name.encode("utf-8"):
        h = _splitmix64(h ^ b)
    if cycle >= 0:
        h = _splitmix64(h ^ cycle)
    return h


def _generator(key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(key))


def zeros(shape):
    if shape == ():
        return 0.0
    return np.zeros(shape, dtype=np.float64)


def ones(shape):
    if shape == ():
        return 1.0
    return np.ones(shape, dtype=np.float64)


def glorot_uniform(shape, key: int):
    """Uniform in [-limit, limit] with limit = sqrt(6 / (fan_in + fan_out))."""
    if shape == ():
        fan_in = fan_out = 1
    elif len(shape) == 1:
        fan_in = fan_out = shape[0]
    else:
        fan_out, fan_in = shape[0], shape[1]
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    g = _generator(key)
    if shape == ():
        return float(g.uniform(-limit, limit))
    return g.uniform(-limit, limit, size=shape)


def orthogonal(shape, key: int):
    """Orthonormal rows (or a unit vector) from seeded Gaussians."""
    g = _generator(key)
    if shape == ():
        return 1.0
    if len(shape) == 1:
        v = g.standard_normal(shape[0])
        n = np.linalg.norm(v)
        return v / n if n > 0 else np.ones(shape) / math.sqrt(shape[0])
    rows = int(np.prod(shape[:-1]))
    cols = shape[-1]
    a = g.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return q[:rows, :cols].reshape(shape)


def default_value(kind: str, shape):
    """The placeholder a lowered initializer uses; guarded away at runtime."""
    if shape == ():
        return {"bool": False, "int": 0, "num": 0.0}[kind]
    if kind == "bool":
        return np.zeros(shape, dtype=bool)
    if kind == "int":
        return np.zeros(shape, dtype=np.int64)
    return np.zeros(shape, dtype=np.float64)


# ---- value operations ----

def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _both_int(a, b) -> bool:
    if _is_int(a) and _is_int(b):
        return True
    int_arrays = True
    for v in (a, b):
        if isinstance(v, np.ndarray):
            int_arrays = int_arrays and v.dtype.kind == "i"
        else:
            int_arrays = int_arrays and _is_int(v)
    return int_arrays and (isinstance(a, np.ndarray) or isinstance(b, np.ndarray))


def _divide(a, b):
    if _both_int(a, b):
        if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
            if np.any(np.asarray(b) == 0):
                raise EvalError("integer division by zero")
            return np.asarray(a) // np.asarray(b)
        if b == 0:
            raise EvalError("integer division by zero")
        return a // b
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.true_divide(a, b) if isinstance(a, np.ndarray) or \
            isinstance(b, np.ndarray) else _float_div(a, b)


def _float_div(a, b):
    a = float(a)
    b = float(b)
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)
    return a / b


def _sigmoid(x):
    if isinstance(x, np.ndarray):
        out = np.empty_like(x, dtype=np.float64)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        return out
    x = float(x)
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


def apply_op(fn: str, vals, k: int = None):
    """Apply one builtin to present payloads; total except via EvalError."""
    if fn == "+":
        return vals[0] + vals[1]
    if fn == "-":
        return vals[0] - vals[1]
    if fn == "*":
        return vals[0] * vals[1]
    if fn == "/":
        return _divide(vals[0], vals[1])
    if fn == "u-":
        return -vals[0]
    if fn == "not":
        return np.logical_not(vals[0]) if isinstance(vals[0], np.ndarray) \
            else not vals[0]
    if fn == "and":
        return np.logical_and(vals[0], vals[1]) if _any_array(vals) \
            else (vals[0] and vals[1])
    if fn == "or":
        return np.logical_or(vals[0], vals[1]) if _any_array(vals) \
            else (vals[0] or vals[1])
    if fn in ("<", "<=", ">", ">=", "==", "!="):
        a, b = vals
        if _any_array(vals):
            return {"<": np.less, "<=": np.less_equal, ">": np.greater,
                    ">=": np.greater_equal, "==": np.equal,
                    "!=": np.not_equal}[fn](a, b)
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b,
                "==": a == b, "!=": a != b}[fn]
    if fn == "if":
        c, a, b = vals
        return a if c else b
    if fn == "sigmoid":
        return _sigmoid(vals[0])
    if fn == "tanh":
        return np.tanh(vals[0]) if isinstance(vals[0], np.ndarray) \
            else math.tanh(float(vals[0]))
    if fn == "relu":
        if isinstance(vals[0], np.ndarray):
            return np.maximum(vals[0], 0)
        return vals[0] if vals[0] > 0 else type(vals[0])(0)
    if fn == "matmul":
        return np.matmul(vals[0], vals[1])
    if fn == "concat":
        return np.concatenate([np.atleast_1d(vals[0]), np.atleast_1d(vals[1])])
    if fn == "reshape":
        try:
            return np.reshape(vals[0], k)
        except ValueError as exc:
            raise EvalError(str(exc))
    if fn == "index":
        a = vals[0]
        if not isinstance(a, np.ndarray) or k >= a.shape[0]:
            raise EvalError("index %r out of range" % k)
        v = a[k]
        return float(v) if np.ndim(v) == 0 and v.dtype.kind == "f" else \
            (int(v) if np.ndim(v) == 0 and v.dtype.kind == "i" else
             (bool(v) if np.ndim(v) == 0 else v))
    if fn == "tensor":
        return np.array(vals)
    if fn == "param":
        return vals[0]
    raise EvalError("unknown builtin %r" % fn)


def _any_array(vals) -> bool:
    return any(isinstance(v, np.ndarray) for v in vals)
