"""Operational simulator: demand-protocol iteration functions, window
management, and agreement with the synchronous evaluator on corpus
programs.
"""

import pathlib

import pytest

from mlr.domain import (ABSENT, BOT, ERR, PENDING, known, leq, nv,
                        parse_cell)
from mlr.normalize import normalize
from mlr.opsim import (FinitudeMode, OpEngine, eval_op, iter_fby,
                       iter_post, siter_const, siter_funapp, siter_merge,
                       siter_when)
from mlr.parser import parse
from mlr.sync import eval_sync
from mlr.trace import Trace, read_inputs

PROGRAMS = pathlib.Path(__file__).resolve().parents[1] / "src" / "mlr" / "corpus" / "programs"

T, F = known(True), known(False)


def cells(*texts):
    return [parse_cell(t) for t in texts]


def cell(text):
    return parse_cell(text)


def load_node(name, **kw):
    return normalize(parse((PROGRAMS / (name + ".mlr")).read_text()), **kw)


def input_trace(node, rows):
    names = list(rows)
    length = len(next(iter(rows.values())))
    csv = "cycle," + ",".join(names) + "\n" + "\n".join(
        "%d,%s" % (n, ",".join(str(rows[v][n]) for v in names))
        for n in range(length))
    declared = {v: node.types[v] for v in names if v in node.types}
    tr, _ = read_inputs(csv, declared)
    return tr


def run_op(name, rows, cycles, **kw):
    node = load_node(name)
    inputs = input_trace(node, rows) if rows else Trace([], {})
    kw.setdefault("end", cycles if not rows
                  else len(next(iter(rows.values()))))
    return node, eval_op(node, inputs, cycles, **kw)


def run_sync(name, rows, cycles, **kw):
    node = load_node(name)
    inputs = input_trace(node, rows) if rows else Trace([], {})
    kw.setdefault("end", cycles if not rows
                  else len(next(iter(rows.values()))))
    return eval_sync(node, inputs, cycles, **kw)


def out_row(tr, var):
    return list(tr.columns[var])


def assert_equiv(op_trace, sync_trace):
    """Operational/denotational agreement: decided cells coincide, and
    a bottom cell on either side faces bottom or pending."""
    for v in sync_trace.vars:
        for n in range(sync_trace.length):
            a = op_trace.cell(v, n)
            b = sync_trace.cell(v, n)
            if a.is_decided or b.is_decided:
                assert a == b, "%s@%d: op %r vs sync %r" % (v, n, a, b)
            else:
                assert a.tag != 4 and b.tag != 4  # neither is Err


BP = ["false", "false", "true", "true", "false", "true"]
APPB = {"i": [str(k) for k in range(6)], "bp": BP}


def lift(getter_list):
    lst = list(getter_list)
    return lambda m: lst[m] if 0 <= m < len(lst) else BOT


# ---- constants ----

class TestSiterConst:
    def test_bottom_is_not_demanded(self):
        assert siter_const(1, BOT) is BOT

    def test_pending_fires(self):
        assert siter_const(1, PENDING) == known(1)

    def test_absent_stays(self):
        assert siter_const(1, ABSENT) is ABSENT

    def test_same_known_kept(self):
        assert siter_const(1, known(1)) == known(1)

    def test_conflicting_known_is_error(self):
        assert siter_const(1, known(2)) is ERR


# ---- function application ----

class TestSiterFunapp:
    def test_all_known_fires(self):
        vs, ws = siter_funapp("+", [known(2), known(3)], [PENDING])
        assert ws == (known(5),)
        assert vs == (known(2), known(3))

    def test_fires_from_bare_input_presence(self):
        vs, ws = siter_funapp("+", [known(2), known(3)], [BOT])
        assert ws == (known(5),)

    def test_demand_flows_to_inputs(self):
        vs, ws = siter_funapp("+", [BOT, BOT], [PENDING])
        assert vs == (PENDING, PENDING)
        assert ws == (PENDING,)

    def test_partial_input_spreads_demand(self):
        vs, ws = siter_funapp("+", [known(2), BOT], [BOT])
        assert vs == (known(2), PENDING)
        assert ws == (PENDING,)

    def test_all_absent_stays_absent(self):
        vs, ws = siter_funapp("+", [ABSENT, ABSENT], [ABSENT])
        assert vs == (ABSENT, ABSENT) and ws == (ABSENT,)

    def test_absent_against_known_is_error(self):
        vs, ws = siter_funapp("+", [known(2), ABSENT], [BOT])
        assert ws == (ERR,) and vs == (ERR, ERR)

    def test_absence_reaches_inputs_from_output(self):
        vs, ws = siter_funapp("+", [BOT, BOT], [ABSENT])
        assert vs == (ABSENT, ABSENT)

    def test_domain_error_poisons_equation(self):
        vs, ws = siter_funapp("/", [known(1), known(0)], [BOT])
        assert ws == (ERR,) and vs == (ERR, ERR)

    def test_all_bottom_is_identity(self):
        vs, ws = siter_funapp("*", [BOT, BOT], [BOT])
        assert vs == (BOT, BOT) and ws == (BOT,)


# ---- when ----

class TestSiterWhen:
    def test_false_condition_decides_absent_output(self):
        o, y, c = siter_when(BOT, BOT, F)
        assert o is ABSENT and y is PENDING and c == F

    def test_demanded_output_spreads_demand(self):
        o, y, c = siter_when(PENDING, BOT, BOT)
        assert y is PENDING and c is PENDING

    def test_known_operand_demands_condition_only(self):
        o, y, c = siter_when(BOT, known(7), BOT)
        assert c is PENDING and o is BOT

    def test_true_condition_passes_value(self):
        o, y, c = siter_when(BOT, known(7), T)
        assert o == known(7)

    def test_true_condition_with_absent_operand_errs(self):
        o, y, c = siter_when(BOT, ABSENT, T)
        assert o is ERR and y is ERR and c is ERR

    def test_demanded_output_against_false_condition_errs(self):
        o, y, c = siter_when(PENDING, known(7), F)
        assert (o, y, c) == (ERR, ERR, ERR)

    def test_absent_condition_spreads_absence(self):
        o, y, c = siter_when(BOT, BOT, ABSENT)
        assert o is ABSENT and y is ABSENT

    def test_all_bottom_stays(self):
        assert siter_when(BOT, BOT, BOT) == (BOT, BOT, BOT)


# ---- merge ----

class TestSiterMerge:
    def test_true_routes_to_first_arm(self):
        o, c, y, z = siter_merge(BOT, T, known(5), BOT)
        assert o == known(5) and z is ABSENT and y == known(5)

    def test_false_routes_to_second_arm(self):
        o, c, y, z = siter_merge(BOT, F, BOT, known(3))
        assert o == known(3) and y is ABSENT

    def test_true_with_bottom_arm_demands_it(self):
        o, c, y, z = siter_merge(BOT, T, BOT, BOT)
        assert o is PENDING and y is PENDING and z is ABSENT

    def test_arm_value_demands_condition(self):
        o, c, y, z = siter_merge(BOT, BOT, known(5), BOT)
        assert c is PENDING and o is BOT

    def test_demanded_output_demands_condition(self):
        o, c, y, z = siter_merge(PENDING, BOT, BOT, BOT)
        assert c is PENDING

    def test_absent_output_spreads_absence(self):
        o, c, y, z = siter_merge(ABSENT, BOT, BOT, BOT)
        assert c is ABSENT and y is ABSENT and z is ABSENT

    def test_absent_condition_spreads_absence(self):
        o, c, y, z = siter_merge(BOT, ABSENT, BOT, BOT)
        assert o is ABSENT and y is ABSENT and z is ABSENT

    def test_routed_arm_conflict_errs(self):
        o, c, y, z = siter_merge(ABSENT, T, known(5), BOT)
        assert (o, c, y, z) == (ERR, ERR, ERR, ERR)


# ---- fby ----

class TestIterFby:
    def test_initial_fire_needs_demand(self):
        o = lift([BOT]); y = lift([BOT]); k = lift([known(0)])
        no, ny, _ = iter_fby(o, y, k, 0)
        assert no is BOT

    def test_initial_fires_on_demand(self):
        o = lift([PENDING]); y = lift([BOT]); k = lift([known(0)])
        no, ny, _ = iter_fby(o, y, k, 0)
        assert no == known(0)

    def test_body_presence_demands_output(self):
        o = lift([BOT]); y = lift([known(4)]); k = lift([known(0)])
        no, ny, _ = iter_fby(o, y, k, 0)
        assert no == known(0)  # demand arrives and the initial fires

    def test_steady_carries_previous_body(self):
        o = lift([known(0), PENDING]); y = lift([known(4), BOT])
        no, ny, _ = iter_fby(o, y, lift([known(0)] * 2), 1)
        assert no == known(4)

    def test_steady_skips_decided_absence(self):
        o = lift([known(0), ABSENT, PENDING])
        y = lift([known(4), ABSENT, BOT])
        no, _, _ = iter_fby(o, y, lift([known(0)] * 3), 2)
        assert no == known(4)

    def test_undecided_history_blocks(self):
        o = lift([BOT, PENDING]); y = lift([BOT, BOT])
        no, _, _ = iter_fby(o, y, lift([known(0)] * 2), 1)
        assert no is PENDING

    def test_body_absence_propagates_to_output(self):
        o = lift([BOT]); y = lift([ABSENT])
        no, _, _ = iter_fby(o, y, lift([known(0)]), 0)
        assert no is ABSENT

    def test_stream_initializer_gates_the_fire(self):
        o = lift([PENDING]); y = lift([known(4)]); i = lift([BOT])
        no, ny, ni = iter_fby(o, y, i, 0, var_init=True)
        assert no is PENDING and ni is PENDING  # demand flows into init

    def test_stream_initializer_fires_when_known(self):
        o = lift([PENDING]); y = lift([known(4)]); i = lift([known(3)])
        no, _, _ = iter_fby(o, y, i, 0, var_init=True)
        assert no == known(3)

    def test_stream_initializer_absence_propagates(self):
        o = lift([BOT]); y = lift([BOT]); i = lift([ABSENT])
        no, _, _ = iter_fby(o, y, i, 0, var_init=True)
        assert no is ABSENT


class TestIterFbyBack:
    def test_steady_carries_next_body(self):
        o = lift([PENDING, known(1)]); y = lift([BOT, known(1)])
        no, _, _ = iter_fby(o, y, lift([known(9)] * 2), 0, back=True,
                            length=2)
        assert no == known(1)

    def test_steady_skips_decided_absence(self):
        o = lift([PENDING, ABSENT, known(1)])
        y = lift([BOT, ABSENT, known(1)])
        no, _, _ = iter_fby(o, y, lift([known(9)] * 3), 0, back=True,
                            length=3)
        assert no == known(1)

    def test_closed_end_fires_initializer_at_last_cycle(self):
        o = lift([PENDING]); y = lift([BOT])
        no, _, _ = iter_fby(o, y, lift([known(9)]), 0, back=True,
                            mode=FinitudeMode.CLOSED, length=1)
        assert no == known(9)

    def test_open_end_never_fires_initializer(self):
        o = lift([PENDING]); y = lift([BOT])
        no, _, _ = iter_fby(o, y, lift([known(9)]), 0, back=True,
                            mode=FinitudeMode.OPEN, length=None)
        assert no is PENDING

    def test_undecided_future_blocks(self):
        o = lift([PENDING, BOT, known(1)])
        y = lift([BOT, BOT, known(1)])
        no, _, _ = iter_fby(o, y, lift([known(9)] * 3), 0, back=True,
                            length=3)
        assert no is PENDING


class TestIterPost:
    def test_value_flows_backward_in_time(self):
        no, ny = iter_post(BOT, known(3))
        assert no == known(3)

    def test_absence_flows_backward_in_time(self):
        no, ny = iter_post(BOT, ABSENT)
        assert no is ABSENT

    def test_demand_flows_forward_in_time(self):
        no, ny = iter_post(PENDING, BOT)
        assert ny is PENDING

    def test_conflict_errs_both(self):
        no, ny = iter_post(known(2), known(3))
        assert no is ERR and ny is ERR


# ---- inflation and monotonicity smoke (full sweep in property tests) ----

def _random_cell(rng):
    r = rng.random()
    if r < 0.2:
        return BOT
    if r < 0.4:
        return PENDING
    if r < 0.6:
        return ABSENT
    if r < 0.9:
        return known(rng.randrange(3))
    return ERR


class TestLatticeDiscipline:
    def test_siter_when_is_inflationary(self):
        import random
        rng = random.Random(7)
        for _ in range(500):
            o, y, c = (_random_cell(rng) for _ in range(3))
            no, ny, nc = siter_when(o, y, c)
            assert leq(o, no) and leq(y, ny) and leq(c, nc)

    def test_siter_merge_is_inflationary(self):
        import random
        rng = random.Random(8)
        for _ in range(500):
            o, c, y, z = (_random_cell(rng) for _ in range(4))
            no, nc, ny, nz = siter_merge(o, c, y, z)
            assert leq(o, no) and leq(c, nc) and leq(y, ny) and leq(z, nz)

    def test_iter_post_is_inflationary(self):
        import random
        rng = random.Random(9)
        for _ in range(500):
            o, y = _random_cell(rng), _random_cell(rng)
            no, ny = iter_post(o, y)
            assert leq(o, no) and leq(y, ny)


# ---- whole-program simulation ----

class TestSimulateRecurrences:
    def test_backfill_appendix_inputs(self):
        _, res = run_op("backfill", APPB, 6)
        assert res.err is None and not res.undecided
        assert out_row(res.trace.restrict(["o"]), "o") == cells(
            "2", "2", "2", "3", "5", "5")

    def test_backfill_figure_inputs(self):
        rows = {"i": ["2", "6", "8", "5", "1", "4"], "bp": BP}
        _, res = run_op("backfill", rows, 6)
        assert out_row(res.trace, "o") == cells("8", "8", "8", "5", "4", "4")

    def test_sample_backfill(self):
        _, res = run_op("sample_backfill", APPB, 6)
        assert res.err is None and not res.undecided
        assert out_row(res.trace, "o") == cells("_", "_", "_", "3", "4", "5")

    def test_merge_backfill(self):
        _, res = run_op("merge_backfill", APPB, 6)
        assert out_row(res.trace, "o") == cells("0", "-1", "-2", "3", "4",
                                                "5")

    def test_rec_merge_backfill(self):
        rows = {"nh": ["false", "true", "true", "true", "false", "true"],
                "bp": BP}
        _, res = run_op("rec_merge_backfill", rows, 6)
        assert out_row(res.trace, "o") == cells(
            "false", "true", "true", "true", "false", "true")

    def test_counter(self):
        _, res = run_op("counter", None, 10)
        assert res.err is None and not res.undecided
        assert out_row(res.trace, "o") == [known(i) for i in range(10)]

    def test_counter_window_stays_small(self):
        _, res = run_op("counter", None, 50)
        assert res.stats.max_window <= 2
        assert res.stats.reclaimed >= 40
        assert res.stats.injections >= 1

    def test_pcounter_computes_no_output(self):
        _, res = run_op("pcounter", None, 10)
        assert res.err is None
        assert len(res.undecided) == 10
        assert not any(c.is_known for c in out_row(res.trace, "o"))
        assert res.stats.reclaimed == 0

    def test_pcounter_open_end_diverges(self):
        node = load_node("pcounter")
        res = eval_op(node, Trace([], {}), 10, end=None, max_window=64)
        assert res.diverged
        assert not any(c.is_known for c in out_row(res.trace, "o"))


class TestSimulateMicros:
    def test_micro_fby_figure_row(self):
        rows = {"i": ["3.0", "5.1", "_", "6.1", "3.0", "2.2"],
                "x": ["4.3", "0.8", "_", "3.3", "1.9", "7.7"]}
        _, res = run_op("micro_fby", rows, 6)
        assert res.err is None
        assert out_row(res.trace, "y") == cells("3.0", "4.3", "_", "0.8",
                                                "3.3", "1.9")

    def test_micro_post_raw_row(self):
        rows = {"i": ["4.3", "3.0", "_", "3.3", "1.9", "7.7"]}
        _, res = run_op("micro_post", rows, 6)
        assert res.err is None
        got = out_row(res.trace, "o")
        assert got[:5] == cells("3.0", "_", "3.3", "1.9", "7.7")
        assert not got[5].is_decided  # final cell unknowable at the end

    def test_micro_when_figure_row(self):
        rows = {"y": ["2", "7", "5", "_", "1"],
                "c": ["true", "false", "true", "_", "false"]}
        _, res = run_op("micro_when", rows, 5)
        assert res.err is None
        assert out_row(res.trace, "x") == cells("2", "_", "5", "_", "_")

    def test_micro_merge_figure_row(self):
        rows = {"c": ["true", "false", "true", "_", "false"],
                "y": ["2", "_", "5", "_", "_"],
                "z": ["_", "3", "_", "_", "1"]}
        _, res = run_op("micro_merge", rows, 5)
        assert res.err is None
        assert out_row(res.trace, "x") == cells("2", "3", "5", "_", "1")

    def test_micro_apply_figure_rows(self):
        rows = {"t": ["1", "2", "1.5", "_", "1"],
                "b": ["0", "0", "0", "_", "0"]}
        node = load_node("micro_apply")
        # t is declared num in the program; keep float typing
        inputs = input_trace(node, rows)
        res = eval_op(node, inputs, 5, end=5)
        assert res.err is None
        assert out_row(res.trace, "o") == cells("1.0", "4.0", "2.25", "_",
                                                "1.0")

    def test_fby_end_figure_row(self):
        rows = {"i": ["2", "6", "8", "5", "1", "4"],
                "end": ["false", "false", "true", "true", "false", "true"],
                "init": ["1", "0", "9", "3", "5", "8"]}
        _, res = run_op("fby_end", rows, 6)
        assert res.err is None
        assert out_row(res.trace, "o") == cells("1.0", "2.0", "6.0", "3.0",
                                                "5.0", "1.0")

    def test_post_end_derived_row(self):
        rows = {"i": ["2", "6", "8", "5", "1", "4"],
                "end": ["false", "false", "true", "true", "false", "true"],
                "init": ["1", "0", "9", "3", "5", "8"]}
        _, res = run_op("post_end", rows, 6)
        assert res.err is None
        got = out_row(res.trace, "o")
        assert got[:5] == cells("6.0", "8.0", "9.0", "3.0", "4.0")
        assert not got[5].is_decided
        assert ("o", 5) in res.undecided


class TestAgreementWithSync:
    CASES = [
        ("backfill", APPB, 6),
        ("sample_backfill", APPB, 6),
        ("merge_backfill", APPB, 6),
        ("rec_merge_backfill",
         {"nh": ["false", "true", "true", "true", "false", "true"],
          "bp": BP}, 6),
        ("counter", None, 10),
        ("pcounter", None, 10),
        ("micro_fby",
         {"i": ["3.0", "5.1", "_", "6.1", "3.0", "2.2"],
          "x": ["4.3", "0.8", "_", "3.3", "1.9", "7.7"]}, 6),
        ("micro_post", {"i": ["4.3", "3.0", "_", "3.3", "1.9", "7.7"]}, 6),
        ("micro_when",
         {"y": ["2", "7", "5", "_", "1"],
          "c": ["true", "false", "true", "_", "false"]}, 5),
        ("micro_merge",
         {"c": ["true", "false", "true", "_", "false"],
          "y": ["2", "_", "5", "_", "_"],
          "z": ["_", "3", "_", "_", "1"]}, 5),
        ("micro_apply",
         {"t": ["1", "2", "1.5", "_", "1"],
          "b": ["0", "0", "0", "_", "0"]}, 5),
        ("fby_end",
         {"i": ["2", "6", "8", "5", "1", "4"],
          "end": ["false", "false", "true", "true", "false", "true"],
          "init": ["1", "0", "9", "3", "5", "8"]}, 6),
        ("post_end",
         {"i": ["2", "6", "8", "5", "1", "4"],
          "end": ["false", "false", "true", "true", "false", "true"],
          "init": ["1", "0", "9", "3", "5", "8"]}, 6),
    ]

    @pytest.mark.parametrize("name,rows,cycles",
                             [(c[0], c[1], c[2]) for c in CASES])
    def test_decided_cells_agree(self, name, rows, cycles):
        node, res = run_op(name, rows, cycles)
        sync = run_sync(name, rows, cycles)
        assert res.err is None
        assert_equiv(res.trace, sync.restrict(res.trace.vars))

    @pytest.mark.parametrize("name,rows,cycles",
                             [(c[0], c[1], c[2]) for c in CASES])
    def test_worklist_equals_rescan(self, name, rows, cycles):
        _, fast = run_op(name, rows, cycles, accel=True)
        _, slow = run_op(name, rows, cycles, accel=False)
        assert fast.trace.to_csv() == slow.trace.to_csv()

    @pytest.mark.parametrize("name,rows,cycles", [
        ("backfill", APPB, 6),
        ("rec_merge_backfill",
         {"nh": ["false", "true", "true", "true", "false", "true"],
          "bp": BP}, 6),
        ("counter", None, 10),
    ])
    def test_confluence_over_choose_orders(self, name, rows, cycles):
        _, base = run_op(name, rows, cycles)
        for seed in range(10):
            _, res = run_op(name, rows, cycles, choose_seed=seed)
            assert res.trace.to_csv() == base.trace.to_csv()

    def test_determinism(self):
        _, a = run_op("backfill", APPB, 6)
        _, b = run_op("backfill", APPB, 6)
        assert a.trace.to_csv() == b.trace.to_csv()


class TestReclamation:
    @pytest.mark.parametrize("period", [1, 2, 4, 8])
    def test_backfill_window_tracks_checkpoint_period(self, period):
        n = 200
        rows = {"i": [str(k) for k in range(n)],
                "bp": ["true" if (k + 1) % period == 0 else "false"
                       for k in range(n)]}
        _, res = run_op("backfill", rows, n)
        assert res.err is None and not res.undecided
        assert res.stats.max_window <= period + 1
        # the broadcast semantics: value of i at the next checkpoint
        nxt = None
        expect = [None] * n
        for k in reversed(range(n)):
            if rows["bp"][k] == "true":
                nxt = int(rows["i"][k])
            expect[k] = nxt
        assert out_row(res.trace, "o") == [known(v) for v in expect]

    def test_quiescent_state_has_empty_todo(self):
        node = load_node("backfill")
        inputs = input_trace(node, APPB)
        eng = OpEngine(node, inputs, 6, end=6)
        eng.run()
        for n in range(eng.floor, eng.lst + 1):
            assert eng.compute_todo(n) == []
