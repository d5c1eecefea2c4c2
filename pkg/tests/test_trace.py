"""Chronogram CSV round-trips, diffing, and input loading."""

import math

import numpy as np
import pytest

from mlr.domain import ABSENT, BOT, ERR, PENDING, known
from mlr.trace import Trace, TraceError, diff_traces, read_inputs
from mlr.types import DataType


def simple_trace():
    return Trace(["i", "o"], {
        "i": [known(1), known(2), ABSENT],
        "o": [known(1.5), BOT, ERR],
    })


class TestCsvRoundTrip:
    def test_header_and_cells(self):
        text = simple_trace().to_csv()
        lines = text.splitlines()
        assert lines[0] == "cycle,i,o"
        assert lines[1] == "0,1,1.5"
        assert lines[2] == "1,2,."
        assert lines[3] == "2,_,!"

    def test_round_trip_exact(self):
        t = Trace(["a", "b", "c"], {
            "a": [known(0.1), known(math.inf), known(math.nan)],
            "b": [known(True), known(False), PENDING],
            "c": [known(np.array([1.5, -2.5])),
                  known(np.array([[1, 2], [3, 4]], dtype=np.int64)),
                  known(np.array([True, False]))],
        })
        back = Trace.from_csv(t.to_csv())
        assert back.vars == t.vars and back.length == 3
        for v in t.vars:
            for i in range(3):
                assert back.columns[v][i] == t.columns[v][i], (v, i)

    def test_floats_stay_floats(self):
        t = Trace(["x"], {"x": [known(2.0)]})
        back = Trace.from_csv(t.to_csv())
        assert isinstance(back.columns["x"][0].value, float)

    def test_bad_header(self):
        with pytest.raises(TraceError, match="cycle"):
            Trace.from_csv("time,x\n0,1\n")

    def test_ragged_row(self):
        with pytest.raises(TraceError, match="cells"):
            Trace.from_csv("cycle,x,y\n0,1\n")

    def test_non_consecutive_cycles(self):
        with pytest.raises(TraceError, match="consecutive"):
            Trace.from_csv("cycle,x\n0,1\n2,3\n")

    def test_ragged_columns_rejected(self):
        with pytest.raises(TraceError, match="ragged"):
            Trace(["a", "b"], {"a": [BOT], "b": [BOT, BOT]})


class TestDiff:
    def test_equal_traces(self):
        assert diff_traces(simple_trace(), simple_trace()) == []

    def test_value_mismatch_located(self):
        a = simple_trace()
        b = simple_trace()
        b.columns["i"][1] = known(99)
        out = diff_traces(a, b)
        assert len(out) == 1 and "cycle 1, i" in out[0]

    def test_symbol_vs_value(self):
        a = Trace(["x"], {"x": [BOT]})
        b = Trace(["x"], {"x": [known(0)]})
        assert len(diff_traces(a, b)) == 1

    def test_tolerance_on_floats(self):
        a = Trace(["x"], {"x": [known(1.0)]})
        b = Trace(["x"], {"x": [known(1.0 + 1e-12)]})
        assert diff_traces(a, b) != []
        assert diff_traces(a, b, tol=1e-9) == []

    def test_tolerance_does_not_cross_kinds(self):
        a = Trace(["x"], {"x": [known(2)]})
        b = Trace(["x"], {"x": [known(2.0)]})
        assert diff_traces(a, b, tol=1.0) != []

    def test_tolerance_on_tensors(self):
        a = Trace(["x"], {"x": [known(np.array([1.0, 2.0]))]})
        b = Trace(["x"], {"x": [known(np.array([1.0, 2.0 + 1e-12]))]})
        assert diff_traces(a, b) != []
        assert diff_traces(a, b, tol=1e-9) == []

    def test_nan_equal_under_tolerance(self):
        a = Trace(["x"], {"x": [known(math.nan)]})
        b = Trace(["x"], {"x": [known(math.nan)]})
        assert diff_traces(a, b) == []
        assert diff_traces(a, b, tol=1e-9) == []

    def test_length_and_missing_var(self):
        a = Trace(["x", "y"], {"x": [BOT], "y": [BOT]})
        b = Trace(["x"], {"x": [BOT, BOT]})
        out = diff_traces(a, b)
        assert any("missing" in m for m in out)
        assert any("lengths differ" in m for m in out)


class TestPretty:
    def test_rows_per_variable(self):
        text = simple_trace().pretty()
        lines = text.splitlines()
        assert lines[0].startswith("cycle |")
        assert lines[1].split(" | ")[0].strip() == "i"
        assert "!" in lines[2]

    def test_alignment(self):
        text = simple_trace().pretty()
        lines = text.splitlines()
        assert lines[0].index("|") == lines[1].index("|")


class TestReadInputs:
    def test_kind_inference(self):
        t, types = read_inputs("cycle,i,x,bp\n0,1,0.5,true\n1,2,1.0,false\n")
        assert types == {"i": DataType("int", ()),
                         "x": DataType("num", ()),
                         "bp": DataType("bool", ())}
        assert t.columns["i"][0] == known(1)
        assert t.columns["x"][0] == known(0.5)
        assert t.columns["bp"][1] == known(False)

    def test_declared_wins_over_guess(self):
        t, types = read_inputs("cycle,x\n0,3\n",
                               {"x": DataType("num", ())})
        assert types["x"].kind == "num"
        v = t.columns["x"][0].value
        assert v == 3.0 and isinstance(v, float)

    def test_absent_and_bottom_cells(self):
        t, _ = read_inputs("cycle,i\n0,_\n1,5\n2,.\n")
        assert t.columns["i"][0] == ABSENT
        assert t.columns["i"][2] == BOT

    def test_inference_skips_absent_prefix(self):
        _, types = read_inputs("cycle,x\n0,_\n1,2.5\n")
        assert types["x"] == DataType("num", ())

    def test_tensor_column(self):
        t, types = read_inputs("cycle,x\n0,t[2]:1.0;2.0\n")
        assert types["x"] == DataType("num", (2,))
        assert np.array_equal(t.columns["x"][0].value, np.array([1.0, 2.0]))

    def test_tensor_shape_checked(self):
        with pytest.raises(TraceError, match="shape"):
            read_inputs("cycle,x\n0,t[3]:1.0;2.0;3.0\n",
                        {"x": DataType("num", (2,))})

    def test_int_column_rejects_float(self):
        with pytest.raises(TraceError, match="expected an int"):
            read_inputs("cycle,i\n0,2.5\n", {"i": DataType("int", ())})

    def test_bool_column_rejects_number(self):
        with pytest.raises(TraceError, match="true/false"):
            read_inputs("cycle,b\n0,1\n", {"b": DataType("bool", ())})

    def test_pending_rejected_in_inputs(self):
        with pytest.raises(TraceError, match="must be values"):
            read_inputs("cycle,i\n0,?\n", {"i": DataType("int", ())})

    def test_all_absent_column_needs_annotation(self):
        with pytest.raises(TraceError, match="infer"):
            read_inputs("cycle,i\n0,_\n1,_\n")

    def test_duplicate_column(self):
        with pytest.raises(TraceError, match="duplicate"):
            read_inputs("cycle,i,i\n0,1,2\n")

    def test_empty_body_ok_when_declared(self):
        t, types = read_inputs("cycle,i\n", {"i": DataType("int", ())})
        assert t.length == 0 and types["i"].kind == "int"
