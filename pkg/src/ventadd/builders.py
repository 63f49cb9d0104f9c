"""Synthesis of the vented classical-quantum adders.

Every builder emits a :class:`~ventadd.ir.Circuit` whose offset bits stay
symbolic (``d0``, ``d1``, ...).  Offset bits only ever invert controls or
condition single-qubit bit flips, which is what lets :func:`apply_control`
swap them for a control qubit without adding Toffolis.

Qubit roles: ``clean`` ancillae start and end in ``|0>``; ``dirty`` ancillae
hold arbitrary values that are restored; ``carry_in`` is only ever read.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence, Union

from .core import OffsetConstant
from .ir import (
    MEASURE_X_RESET,
    ONE,
    Circuit,
    Control,
    Expr,
    Instruction,
    Layout,
    X,
    Z,
)

__all__ = [
    "WidthTooSmall",
    "ControlPromotionError",
    "VentLedger",
    "BUILDERS",
    "MIN_WIDTH",
    "build",
    "build_streaming_adder",
    "build_carry_xor",
    "build_adder_2clean_ndirty",
    "build_adder_3clean",
    "bind_offset",
    "apply_control",
]


class WidthTooSmall(ValueError):
    pass


class ControlPromotionError(ValueError):
    """Substituting a control qubit would need a gate with three controls."""


@dataclass(frozen=True)
class VentLedger:
    """``(record_index, carry_bit_index)`` for every vented carry, in order.

    Record ``r`` being 1 means a phase flip by carry bit ``k`` of the addition
    is still owed.
    """

    entries: tuple[tuple[int, int], ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass(frozen=True)
class _Const:
    """A carry input replaced by a classical bit."""

    bit: int


_Source = Union[int, _Const]


class _Emitter:
    def __init__(self) -> None:
        self.ops: list[Instruction] = []
        self.records = 0

    def gate(
        self,
        kind: str,
        target: int,
        *controls: tuple[_Source, Expr],
        cond: Expr | None = None,
    ) -> None:
        quantum = []
        factors = [] if cond is None else [cond]
        for src, polarity in controls:
            if isinstance(src, _Const):
                # a control on a known bit fires iff bit == polarity
                factors.append(polarity ^ src.bit ^ 1)
            else:
                quantum.append(Control((src,), polarity))
        live = []
        for f in factors:
            if not f.is_constant:
                live.append(f)
            elif f.constant == 0:
                return
        if len(live) > 1:
            raise ValueError("gate would need a product of classical conditions")
        self.ops.append(Instruction(kind, target, tuple(quantum), live[0] if live else None))

    def x(self, target: int, *controls: tuple[_Source, Expr], cond: Expr | None = None) -> None:
        self.gate(X, target, *controls, cond=cond)

    def z(self, target: int, cond: Expr | None = None) -> None:
        self.gate(Z, target, cond=cond)

    def vent(self, qubit: int) -> int:
        r = self.records
        self.ops.append(Instruction(MEASURE_X_RESET, qubit, record=r))
        self.records += 1
        return r


def _d(k: int) -> Expr:
    return Expr.offset(k)


def _vented_add(
    em: _Emitter,
    target: Sequence[int],
    offs: Sequence[int],
    cin: _Source,
    clean: tuple[int, int],
    *,
    carry_out: int | None = None,
    merge_into: Sequence[int] = (),
) -> list[tuple[int, int]]:
    """Streaming ripple-carry addition of the offset bits ``offs`` into ``target``.

    Each carry lives in a clean qubit only until the next carry and the sum
    bit are computed, then it is vented.  Returns ``(record, k)`` pairs where
    ``k`` is the carry index local to ``target``.  With ``carry_out`` the carry
    out of the top bit is left in that (clean) qubit; otherwise it is folded
    into the top sum bit.  ``merge_into[k-1]`` receives carry ``k`` before it
    is vented.
    """
    w = len(target)
    for k in range(w):
        em.x(target[k], cond=_d(offs[k]))
    if w == 1 and carry_out is None:
        em.x(target[0], (cin, ONE))
        return []

    ledger = []
    last = w - 1 if carry_out is not None else w - 2
    for k in range(last + 1):
        holder: _Source = cin if k == 0 else clean[k % 2]
        if k < last:
            dest = clean[(k + 1) % 2]
        else:
            dest = carry_out if carry_out is not None else target[w - 1]
        dk = _d(offs[k])
        # dest ^= (c_k ^ d_k)(x_k ^ d_k) == c_{k+1} ^ d_k
        em.x(dest, (holder, ONE ^ dk), (target[k], ONE))
        em.x(dest, cond=dk)
        em.x(target[k], (holder, ONE))
        if k >= 1:
            if k - 1 < len(merge_into):
                em.x(merge_into[k - 1], (holder, ONE))
            ledger.append((em.vent(holder), k))
    return ledger


def _carry_xor(
    em: _Emitter,
    target: Sequence[int],
    offs: Sequence[int],
    cin: _Source,
    dirty: Sequence[int],
    *,
    complement: bool = False,
) -> None:
    """``dirty[k] ^= carry bit k+1`` of ``target + d + cin`` for each ``k``.

    With ``complement`` the carries are those of ``~target + d + cin``, which
    after an addition reproduce the carries of that addition.

    Two Toffoli ladders over the borrowed register: the first runs top-down
    and touches each dirty qubit with its unknown neighbour, the second runs
    bottom-up with the carry-corrected neighbour, so the garbage cancels.
    The polarity shift ``d_{k-1} ^ d_k`` between the ladders is what turns the
    recurrence into ``maj``.
    """
    m = len(dirty)
    if m == 0:
        return
    if m > len(target):
        raise ValueError("carry-xor cannot produce more carries than target bits")

    def y(k: int) -> tuple[int, Expr]:
        pol = _d(offs[k]) if complement else ONE ^ _d(offs[k])
        return target[k], pol

    for k in range(m - 1, 0, -1):
        em.x(dirty[k], (dirty[k - 1], ONE), y(k))
    em.x(dirty[0], (cin, ONE ^ _d(offs[0])), y(0))
    for k in range(1, m):
        em.x(dirty[k], (dirty[k - 1], ONE ^ _d(offs[k - 1]) ^ _d(offs[k])), y(k))
    for k in range(m):
        em.x(dirty[k], cond=_d(offs[k]))


def _phase_layer(em: _Emitter, dirty: Sequence[int], ledger: Sequence[tuple[int, int]]) -> None:
    for r, k in ledger:
        em.z(dirty[k - 1], cond=Expr.record(r))


def _check_width(n: int, minimum: int, name: str) -> None:
    if n < minimum:
        raise WidthTooSmall(f"{name} needs n >= {minimum}, got {n}")


def _carry_source(layout: Layout, carry_in_const: int | None) -> _Source:
    if carry_in_const is not None:
        if carry_in_const not in (0, 1):
            raise ValueError("carry_in_const must be 0 or 1")
        return _Const(carry_in_const)
    return layout.span("carry_in").start


def _finish(layout: Layout, em: _Emitter, n: int, **meta) -> Circuit:
    return Circuit(layout, tuple(em.ops), n, meta=meta)


def build_streaming_adder(
    n: int,
    *,
    merged_carry_xor: bool = False,
    carry_in_const: int | None = None,
) -> tuple[Circuit, VentLedger]:
    """``target += d + carry_in`` using 2 clean ancillae and ``n - 1`` Toffolis.

    Leaves phase corrections outstanding: for each ledger entry ``(r, k)``
    with record ``r`` set, a phase flip by bit ``k`` of
    ``carry(~target', d, carry_in)`` is owed.  ``merged_carry_xor`` adds a
    ``dirty`` span of ``n - 2`` qubits that receive the vented carries.
    """
    _check_width(n, 2, "streaming adder")
    layout = Layout.build(
        ("clean", 2),
        ("dirty", n - 2 if merged_carry_xor else 0),
        ("carry_in", 0 if carry_in_const is not None else 1),
        ("target", n),
    )
    em = _Emitter()
    clean = layout.qubits("clean")
    ledger = _vented_add(
        em,
        layout.qubits("target"),
        range(n),
        _carry_source(layout, carry_in_const),
        (clean[0], clean[1]),
        merge_into=layout.qubits("dirty"),
    )
    vents = VentLedger(tuple(ledger))
    return _finish(layout, em, n, builder="stream", ledger=vents), vents


def build_carry_xor(n: int, *, carry_in_const: int | None = None) -> Circuit:
    """``dirty ^= carry(target, d, carry_in) >> 1`` over ``n - 1`` dirty qubits."""
    _check_width(n, 2, "carry-xor")
    layout = Layout.build(
        ("dirty", n - 1),
        ("carry_in", 0 if carry_in_const is not None else 1),
        ("target", n),
    )
    em = _Emitter()
    _carry_xor(
        em,
        layout.qubits("target"),
        range(n),
        _carry_source(layout, carry_in_const),
        layout.qubits("dirty"),
    )
    return _finish(layout, em, n, builder="carryxor")


def build_adder_2clean_ndirty(n: int, *, carry_in_const: int | None = None) -> Circuit:
    """``target += d + carry_in`` with 2 clean and ``n - 2`` dirty ancillae."""
    _check_width(n, 3, "2-clean adder")
    layout = Layout.build(
        ("clean", 2),
        ("dirty", n - 2),
        ("carry_in", 0 if carry_in_const is not None else 1),
        ("target", n),
    )
    em = _Emitter()
    cin = _carry_source(layout, carry_in_const)
    clean, dirty, target = layout.qubits("clean"), layout.qubits("dirty"), layout.qubits("target")

    ledger = _vented_add(em, target, range(n), cin, (clean[0], clean[1]), merge_into=dirty)
    # dirty now holds g ^ carries; Z there, un-xor the carries, Z again.
    _phase_layer(em, dirty, ledger)
    _carry_xor(em, target, range(n), cin, dirty, complement=True)
    _phase_layer(em, dirty, ledger)
    return _finish(layout, em, n, builder="add2c")


def build_adder_3clean(n: int, *, carry_in_const: int | None = None) -> Circuit:
    """``target += d + carry_in`` with 3 clean ancillae and no dirty ones.

    The register is split into a bottom half of ``ceil(n/2)`` bits and a top
    half; each half serves as borrowed workspace while the other's vented
    phases are fixed.
    """
    _check_width(n, 4, "3-clean adder")
    layout = Layout.build(
        ("clean", 3),
        ("carry_in", 0 if carry_in_const is not None else 1),
        ("target", n),
    )
    em = _Emitter()
    cin = _carry_source(layout, carry_in_const)
    c0, c1, cross = layout.qubits("clean")
    target = layout.qubits("target")
    b = (n + 1) // 2
    bottom, top = target[:b], target[b:]
    offs_bot, offs_top = list(range(b)), list(range(b, n))

    # 1. bottom half, leaving the bottom-to-top carry in `cross`
    led_bot = _vented_add(em, bottom, offs_bot, cin, (c0, c1), carry_out=cross)
    # 2. top half, xoring its carries into the (borrowed) bottom half
    borrowed = bottom[: max(len(top) - 2, 0)]
    led_top = _vented_add(em, top, offs_top, cross, (c0, c1), merge_into=borrowed)
    # 3. discharge the top half's vented phases
    _phase_layer(em, borrowed, led_top)
    _carry_xor(em, top, offs_top, cross, borrowed, complement=True)
    _phase_layer(em, borrowed, led_top)
    # 4. vent the cross-half carry
    led_bot.append((em.vent(cross), b))
    # 5. discharge the bottom half's phases by borrowing the top half; an odd
    #    width needs one more workspace qubit and the clean ones are idle.
    work = (list(top) + [c0, c1, cross])[:b]
    _phase_layer(em, work, led_bot)
    _carry_xor(em, bottom, offs_bot, cin, work, complement=True)
    _phase_layer(em, work, led_bot)
    _carry_xor(em, bottom, offs_bot, cin, work, complement=True)
    return _finish(layout, em, n, builder="add3c")


BUILDERS: dict[str, Callable[..., Circuit]] = {
    "stream": lambda n, **kw: build_streaming_adder(n, **kw)[0],
    "carryxor": build_carry_xor,
    "add2c": build_adder_2clean_ndirty,
    "add3c": build_adder_3clean,
}

MIN_WIDTH = {"stream": 2, "carryxor": 2, "add2c": 3, "add3c": 4}


def build(builder: str, n: int, **kwargs) -> Circuit:
    try:
        fn = BUILDERS[builder]
    except KeyError:
        raise ValueError(f"unknown builder {builder!r}; choose from {sorted(BUILDERS)}") from None
    return fn(n, **kwargs)


def _offset_value(circuit: Circuit, d: OffsetConstant | int) -> int:
    if isinstance(d, int):
        d = OffsetConstant(d, circuit.offset_width)
    if d.width != circuit.offset_width:
        raise ValueError(f"offset width {d.width} != circuit width {circuit.offset_width}")
    return d.value


def bind_offset(circuit: Circuit, d: OffsetConstant | int) -> Circuit:
    """Specialize every offset term to the bits of ``d``.

    Gates whose classical condition becomes constant 0 are dropped.
    """
    value = _offset_value(circuit, d)
    out = []
    for ins in circuit.instructions:
        controls = tuple(replace(c, polarity=c.polarity.bind(value)) for c in ins.controls)
        cond = ins.condition
        if cond is not None:
            cond = cond.bind(value)
            if cond.is_constant:
                if cond.constant == 0:
                    continue
                cond = None
        out.append(replace(ins, controls=controls, condition=cond))
    return circuit.with_instructions(out, offset=value)


def apply_control(circuit: Circuit, d: OffsetConstant | int) -> Circuit:
    """Controlled version of ``circuit`` specialized to offset ``d``.

    Offset bits that are 0 are dropped and offset bits that are 1 become uses
    of a new ``control`` qubit: an inverted control turns into a parity
    control with the control qubit, and a bit flip conditioned on ``d_k``
    turns into a CNOT from it.  The carry input is left as it is.
    """
    value = _offset_value(circuit, d)
    layout = circuit.layout.with_span("control")
    ctrl = layout.span("control").start
    out = []
    for i, ins in enumerate(circuit.instructions):
        controls = []
        for c in ins.controls:
            bound = c.polarity.bind(0)
            if c.polarity.bind(value) != bound:
                controls.append(Control(c.qubits + (ctrl,), bound))
            else:
                controls.append(Control(c.qubits, bound))
        cond = ins.condition
        if cond is not None:
            bound = cond.bind(0)
            if cond.bind(value) != bound:
                controls.append(Control((ctrl,), ONE ^ bound))
                cond = None
            elif bound.is_constant:
                if bound.constant == 0:
                    continue
                cond = None
            else:
                cond = bound
        if len(controls) > 2:
            raise ControlPromotionError(
                f"instruction {i} would need {len(controls)} controls after substitution"
            )
        out.append(replace(ins, controls=tuple(controls), condition=cond))
    return Circuit(layout, tuple(out), circuit.offset_width, value, meta=dict(circuit.meta))
