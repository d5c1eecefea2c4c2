"""Lattice unit tests: the full join table, frozen by hand."""

import numpy as np
import pytest

from mlr.domain import (
    ABSENT, BOT, ERR, PENDING, cerr, join, known, leq, nv, parse_cell,
    render_cell, state_leq, update, values_equal,
)

K2 = known(2)
K3 = known(3)


def test_join_identity_and_absorption():
    assert join(BOT, K2) == K2
    assert join(K2, BOT) == K2
    assert join(ERR, K2) == ERR
    assert join(ABSENT, ERR) == ERR


def test_join_full_table():
    v, w = known(2), known(3)
    table = [
        # (a, b, expected)
        (BOT, BOT, BOT), (BOT, PENDING, PENDING), (BOT, ABSENT, ABSENT),
        (BOT, v, v), (BOT, ERR, ERR),
        (PENDING, PENDING, PENDING), (PENDING, ABSENT, ERR),
        (PENDING, v, v), (PENDING, ERR, ERR),
        (ABSENT, ABSENT, ABSENT), (ABSENT, v, ERR), (ABSENT, ERR, ERR),
        (v, v, v), (v, w, ERR), (v, ERR, ERR),
        (ERR, ERR, ERR),
    ]
    for a, b, expect in table:
        assert join(a, b) == expect, (a, b)
        assert join(b, a) == expect, (b, a)  # commutative on the table


def test_join_known_same_payload_variants():
    assert join(known(2.0), known(2.0)) == known(2.0)
    assert join(known(True), known(True)) == known(True)
    # bool is not int for lattice purposes
    assert join(known(True), known(1)) == ERR
    # ints are not floats either
    assert join(known(2), known(2.0)) == ERR
    # nan meets nan without conflict (bitwise comparison)
    assert join(known(float("nan")), known(float("nan"))).is_known
    t = np.array([1.0, 2.0])
    assert join(known(t), known(t.copy())) == known(t)
    assert join(known(t), known(np.array([1.0, 2.5]))) == ERR
    assert join(known(t), known(np.array([[1.0, 2.0]]))) == ERR  # shape differs


def test_leq_matches_join():
    vals = [BOT, PENDING, ABSENT, K2, K3, ERR]
    for a in vals:
        for b in vals:
            assert leq(a, b) == (join(a, b) == b), (a, b)


def test_nv():
    assert nv(known(3.5)) == PENDING
    assert nv(ABSENT) == ABSENT
    assert nv(ERR) == ERR
    assert nv(BOT) == BOT
    assert nv(PENDING) == PENDING


def test_cerr():
    assert cerr({"x": known(1), "y": ERR}) == {"x": ERR, "y": ERR}
    s = {"x": known(1), "y": ABSENT}
    assert cerr(s) == s
    assert cerr({}) == {}


def test_update():
    assert update({"x": PENDING}, {"x": known(4)}) == {"x": known(4)}
    assert update({"x": known(4)}, {"x": known(5)}) == {"x": ERR}
    assert update({"x": BOT}, {"y": ABSENT}) == {"x": BOT, "y": ABSENT}


def test_state_leq():
    assert state_leq({"x": BOT}, {"x": known(1)})
    assert not state_leq({"x": known(1)}, {"x": BOT})
    assert state_leq({}, {"x": ABSENT})


@pytest.mark.parametrize("cell", [
    BOT, PENDING, ABSENT, ERR,
    known(True), known(False), known(0), known(-17), known(3.0),
    known(0.1), known(-2.5e-17), known(float("inf")), known(float("-inf")),
    known(np.array([1.0, 2.0, 3.0])),
    known(np.arange(6, dtype=np.float64).reshape(2, 3)),
    known(np.array([True, False])),
    known(np.array([4, 5], dtype=np.int64)),
    known(np.array([], dtype=np.int64)),
])
def test_render_parse_round_trip(cell):
    assert parse_cell(render_cell(cell)) == cell


def test_render_specific_forms():
    assert render_cell(known(3.0)) == "3.0"
    assert render_cell(known(3)) == "3"
    assert render_cell(known(True)) == "true"
    assert render_cell(BOT) == "."
    assert render_cell(PENDING) == "?"
    assert render_cell(ABSENT) == "_"
    assert render_cell(ERR) == "!"
    assert render_cell(known(np.array([1.5, 2.0]))) == "t[2]:1.5;2.0"
    # 17 significant digits round-trip
    x = 0.1
    assert float(render_cell(known(x))) == x


def test_values_equal_zero_signs():
    # bitwise float equality distinguishes signed zeros
    assert not values_equal(0.0, -0.0)
    assert values_equal(-0.0, -0.0)
