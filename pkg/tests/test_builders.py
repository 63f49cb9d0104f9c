import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ventadd import core
from ventadd.builders import (
    BUILDERS,
    MIN_WIDTH,
    ControlPromotionError,
    WidthTooSmall,
    apply_control,
    bind_offset,
    build,
    build_adder_2clean_ndirty,
    build_adder_3clean,
    build_carry_xor,
    build_streaming_adder,
)
from ventadd.ir import MEASURE_X_RESET, Circuit, Control, Expr, Instruction, X, validate
from ventadd.resources import count, lint_carry_in_control_only
from ventadd.simulator import iter_branches, pack, run_basis, unpack, BranchPolicy


def outputs(circuit, d=None, records=None, **spans):
    """Run every combination of the given span values through one branch.

    Returns the output basis indices in ``itertools.product`` order.
    """
    names = list(spans)
    grid = list(itertools.product(*(spans[k] for k in names)))
    inputs = np.array([pack(circuit, **dict(zip(names, vals))) for vals in grid])
    if records is None:
        records = (0,) * circuit.record_count
    out, _ = run_basis(circuit, inputs, records, d)
    return grid, out


def all_branches(circuit):
    return list(iter_branches(circuit, BranchPolicy.enumerate_all()))


# --- streaming adder ---------------------------------------------------------


def test_stream_figure_instance_sum():
    c, ledger = build_streaming_adder(6)
    idx = pack(c, target=0)
    out, sign = run_basis(c, np.array([idx]), (0,) * 4, 43)
    assert unpack(c, out[0], "target") == 43
    assert unpack(c, out[0], "clean") == 0
    assert sign[0] == 1


def test_stream_figure_instance_structure():
    c = bind_offset(build("stream", 6), 43)
    lay = c.layout
    assert lay.qubits("clean") == [0, 1] and lay.qubits("carry_in") == [2]
    ops = c.instructions
    assert [i.target for i in ops[:4] if not i.controls] == [3, 4, 6, 8]
    tof = [(i.target, {q for ctl in i.controls for q in ctl.qubits}) for i in ops if len(i.controls) == 2]
    assert tof == [(1, {2, 3}), (0, {1, 4}), (1, {0, 5}), (0, {1, 6}), (8, {0, 7})]
    cx = [(i.target, i.controls[0].qubits[0]) for i in ops if len(i.controls) == 1]
    assert cx == [(3, 2), (4, 1), (5, 0), (6, 1), (7, 0)]
    assert [i.target for i in ops if i.kind == MEASURE_X_RESET] == [1, 0, 1, 0]


@pytest.mark.parametrize("n", range(2, 9))
def test_stream_cost_and_ledger(n):
    c, ledger = build_streaming_adder(n)
    assert count(bind_offset(c, (1 << n) - 1)).toffoli_count == n - 1
    assert len(ledger) == n - 2 == c.record_count
    assert [k for _, k in ledger] == list(range(1, n - 1))
    assert [r for r, _ in ledger] == list(range(n - 2))


def test_stream_zero_offset_is_identity_on_every_branch():
    c = build("stream", 6)
    for records in all_branches(c):
        grid, out = outputs(c, 0, records, target=range(64))
        assert list(unpack(c, out, "target")) == [x for (x,) in grid]


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_stream_sum_on_every_branch(n):
    c = build("stream", n)
    for d in range(1 << n):
        for records in all_branches(c):
            grid, out = outputs(c, d, records, target=range(1 << n), carry_in=(0, 1))
            want = [core.reference_add(x, d, c0, n) for x, c0 in grid]
            assert list(unpack(c, out, "target")) == want
            assert not unpack(c, out, "clean").any()


def test_stream_merged_variant_xors_carries_into_dirty():
    n = 5
    c, ledger = build_streaming_adder(n, merged_carry_xor=True)
    assert len(c.layout.qubits("dirty")) == n - 2
    for d in (0, 7, 19, 31):
        grid, out = outputs(c, d, target=range(32), carry_in=(0, 1), dirty=(0, 5))
        for (x, c0, g), o in zip(grid, out):
            carries = core.carry(x, d, c0, n)
            assert unpack(c, o, "dirty") == g ^ ((carries >> 1) & 0b111)
            assert unpack(c, o, "target") == core.reference_add(x, d, c0, n)


def test_stream_with_constant_carry_in():
    c = build("stream", 4, carry_in_const=1)
    assert not c.layout.has("carry_in")
    for d in range(16):
        grid, out = outputs(c, d, target=range(16))
        assert list(unpack(c, out, "target")) == [(x + d + 1) % 16 for (x,) in grid]


# --- carry-xor ---------------------------------------------------------------


def test_carry_xor_figure_offset_example():
    c = build_carry_xor(6)
    grid, out = outputs(c, 43, target=[21], carry_in=[1], dirty=[0])
    assert unpack(c, out[0], "dirty") == core.carry(21, 43, 1, 6) >> 1
    assert c.record_count == 0


@pytest.mark.parametrize("d", [0, 1, 5, 10, 15])
def test_carry_xor_n4_sampled_offsets(d):
    c = build_carry_xor(4)
    grid, out = outputs(c, d, target=range(16), carry_in=(0, 1), dirty=range(8))
    for (x, c0, g), o in zip(grid, out):
        assert unpack(c, o, "dirty") == g ^ (core.carry(x, d, c0, 4) >> 1)
        assert unpack(c, o, "target") == x
        assert unpack(c, o, "carry_in") == c0


def test_carry_xor_zero_offset_leaves_dirty():
    c = build_carry_xor(5)
    grid, out = outputs(c, 0, target=range(32), carry_in=[0], dirty=range(16))
    assert list(unpack(c, out, "dirty")) == [g for _, _, g in grid]


@pytest.mark.parametrize("n", range(2, 10))
def test_carry_xor_cost(n):
    assert count(bind_offset(build_carry_xor(n), (1 << n) - 1)).toffoli_count == 2 * n - 3


# --- 2-clean adder -----------------------------------------------------------


def test_add2c_figure_instance_all_branches():
    c = build_adder_2clean_ndirty(6)
    dirty = np.random.default_rng(6).choice(16, 16, replace=False)
    for records in all_branches(c):
        grid, out = outputs(c, 43, records, target=range(64), carry_in=(0, 1), dirty=dirty)
        want = [core.reference_add(x, 43, c0, 6) for x, c0, _ in grid]
        assert list(unpack(c, out, "target")) == want
        assert list(unpack(c, out, "dirty")) == [int(g) for _, _, g in grid]
        assert not unpack(c, out, "clean").any()


def test_add2c_zero_offset_is_identity():
    c = build_adder_2clean_ndirty(5)
    grid, out = outputs(c, 0, target=range(32), dirty=range(8))
    assert list(unpack(c, out, "target")) == [x for x, _ in grid]


# --- 3-clean adder -----------------------------------------------------------


def test_add3c_figure_instance():
    c = build_adder_3clean(9)
    assert c.qubit_count == 13 and c.record_count <= 12
    rng = np.random.default_rng(279)
    xs = [0] + list(rng.integers(0, 512, 200))
    c0s = [0] + list(rng.integers(0, 2, 200))
    branch = tuple(int(b) for b in rng.integers(0, 2, c.record_count))
    inputs = np.array([pack(c, target=int(x), carry_in=int(b)) for x, b in zip(xs, c0s)])
    for records in ((0,) * c.record_count, branch):
        out, _ = run_basis(c, inputs, records, 279)
        assert unpack(c, out[0], "target") == 279
        want = [core.reference_add(int(x), 279, int(b), 9) for x, b in zip(xs, c0s)]
        assert list(unpack(c, out, "target")) == want
        assert not unpack(c, out, "clean").any()


@pytest.mark.parametrize("n", [4, 5, 6, 7])
def test_add3c_zero_offset_is_identity(n):
    c = build_adder_3clean(n)
    for records in all_branches(c):
        grid, out = outputs(c, 0, records, target=range(1 << n))
        assert list(unpack(c, out, "target")) == [x for (x,) in grid]


@pytest.mark.parametrize("n,expected", [(4, 9), (5, 14), (6, 16), (7, 21), (8, 24), (9, 29), (16, 56)])
def test_add3c_cost(n, expected):
    assert count(bind_offset(build_adder_3clean(n), (1 << n) - 1)).toffoli_count == expected


def test_add3c_layout():
    c = build_adder_3clean(9)
    assert [s.name for s in c.layout.spans] == ["clean", "carry_in", "target"]
    assert len(c.layout.qubits("clean")) == 3


# --- shared ------------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_width_too_small(name):
    with pytest.raises(WidthTooSmall):
        build(name, MIN_WIDTH[name] - 1)
    assert validate(build(name, MIN_WIDTH[name])) == []


def test_unknown_builder():
    with pytest.raises(ValueError):
        build("nope", 4)


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_carry_in_only_used_as_control(name):
    for n in range(MIN_WIDTH[name], 12):
        c = build(name, n)
        assert lint_carry_in_control_only(c)
        assert lint_carry_in_control_only(apply_control(c, (1 << n) - 2))


def test_bind_zero_drops_offset_gates_from_stream():
    c = bind_offset(build("stream", 6), 0)
    assert not c.is_symbolic
    assert not any(ins.condition is not None for ins in c.instructions)
    assert not any(not ins.controls and ins.kind == X for ins in c.instructions)


def test_bind_rejects_width_mismatch():
    with pytest.raises(ValueError):
        bind_offset(build("stream", 4), core.OffsetConstant(3, 5))


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_bind_then_simulate_matches_runtime_offset(name):
    n = 4
    sym = build(name, n)
    spans = {"target": range(16), "carry_in": (0, 1), "dirty": range(1 << len(sym.layout.qubits("dirty")))}
    spans = {k: v for k, v in spans.items() if sym.layout.has(k)}
    for d in range(16):
        bound = bind_offset(sym, d)
        for records in all_branches(sym):
            _, a = outputs(sym, d, records, **spans)
            _, b = outputs(bound, None, records, **spans)
            assert np.array_equal(a, b)


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_bound_counts_never_exceed_symbolic(name):
    for n in range(MIN_WIDTH[name], 9):
        sym = count(build(name, n))
        for d in (0, 1, (1 << n) - 1, (1 << n) // 3):
            b = count(bind_offset(build(name, n), d))
            assert b.toffoli_count <= sym.toffoli_count
            assert b.x_count + b.cx_count <= sym.x_count + sym.cx_count
            assert (b.clean_ancillae, b.dirty_ancillae) == (sym.clean_ancillae, sym.dirty_ancillae)


# --- controlled variants -------------------------------------------------------


def controlled_outputs(circuit, records, **spans):
    return outputs(circuit, None, records, **spans)


def test_control_figure_instance():
    c = apply_control(build("add3c", 9), 279)
    assert c.layout.spans[-1].name == "control"
    assert validate(c) == []
    assert count(c).toffoli_count == count(bind_offset(build("add3c", 9), 279)).toffoli_count
    rng = np.random.default_rng(9)
    xs = rng.integers(0, 512, 64)
    for records in [(0,) * c.record_count, tuple(rng.integers(0, 2, c.record_count))]:
        grid, out = controlled_outputs(c, records, target=xs, control=(0, 1), carry_in=[0])
        want = [(int(x) + ctl * 279) % 512 for x, ctl, _ in grid]
        assert list(unpack(c, out, "target")) == want


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_control_zero_is_identity_without_carry_in(name):
    n = 5 if name != "stream" else 4
    for d in range(1 << n):
        c = apply_control(build(name, n), d)
        for records in all_branches(c)[:4]:
            grid, out = controlled_outputs(c, records, target=range(1 << n), control=[0])
            assert list(unpack(c, out, "target")) == [x for x, _ in grid]


@pytest.mark.parametrize("name", ["stream", "add2c", "add3c"])
def test_control_n5_offset_oracle(name):
    """control=1 adds d + c0; control=0 with c0=0 is the identity.

    With control=0 and c0=1 the qubit carry input still increments the
    target; that case is pinned separately below.
    """
    n = 5
    for d in range(32):
        c = apply_control(build(name, n), d)
        records = all_branches(c)[-1]
        grid, out = controlled_outputs(c, records, target=range(32), control=(0, 1), carry_in=(0, 1))
        for (x, ctl, c0), o in zip(grid, out):
            got = unpack(c, o, "target")
            if ctl == 1:
                assert got == core.reference_add(x, d, c0, n)
            elif c0 == 0:
                assert got == x
            else:
                assert got == (x + 1) % 32
            assert not unpack(c, o, "clean")


@pytest.mark.parametrize("name", sorted(BUILDERS))
def test_control_adds_no_toffolis(name):
    for n in range(MIN_WIDTH[name], 7):
        sym = build(name, n)
        for d in range(1 << n):
            assert count(apply_control(sym, d)).toffoli_count == count(bind_offset(sym, d)).toffoli_count


def test_control_rejects_promotion_to_three_controls():
    c = Circuit(
        build("stream", 2).layout,
        (Instruction(X, 0, (Control((2,), Expr.offset(0)), Control((3,))), condition=Expr.offset(1)),),
        2,
    )
    with pytest.raises(ControlPromotionError):
        apply_control(c, 3)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(sorted(BUILDERS)), st.integers(0, 4), st.data())
def test_function_property_random_cases(name, extra, data):
    n = MIN_WIDTH[name] + extra
    c = build(name, n)
    d = data.draw(st.integers(0, (1 << n) - 1))
    x = data.draw(st.integers(0, (1 << n) - 1))
    c0 = data.draw(st.integers(0, 1))
    g = data.draw(st.integers(0, (1 << len(c.layout.qubits("dirty"))) - 1))
    records = tuple(data.draw(st.lists(st.integers(0, 1), min_size=c.record_count, max_size=c.record_count)))
    out, _ = run_basis(c, np.array([pack(c, target=x, carry_in=c0, dirty=g)]), records, d)
    o = out[0]
    if name == "carryxor":
        assert unpack(c, o, "dirty") == g ^ (core.carry(x, d, c0, n) >> 1)
        assert unpack(c, o, "target") == x
    else:
        assert unpack(c, o, "target") == core.reference_add(x, d, c0, n)
        assert unpack(c, o, "dirty") == g
    assert unpack(c, o, "clean") == 0
    assert unpack(c, o, "carry_in") == c0
