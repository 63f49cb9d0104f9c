"""Gate-level circuit representation emitted by the builders.

The gate set is deliberately tiny: X and Z with up to two controls, plus a
fused X-basis measure-and-reset.  A control is a parity over one or more
qubits, compared against a polarity expression.  Polarities and classical
conditions are XOR-affine expressions over measurement records and the
symbolic offset bits ``d_k``, so specializing a circuit to a concrete offset
(or to a control qubit) is a pure rewrite of those expressions.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

__all__ = [
    "FORMAT_VERSION",
    "Expr",
    "Control",
    "Instruction",
    "Span",
    "Layout",
    "Circuit",
    "X",
    "Z",
    "MEASURE_X_RESET",
    "validate",
    "lower_parity_controls",
    "to_document",
    "from_document",
    "dumps",
    "loads",
    "diagram",
]

FORMAT_VERSION = 1

X = "X"
Z = "Z"
MEASURE_X_RESET = "MeasureXReset"
KINDS = (X, Z, MEASURE_X_RESET)

_TERM = re.compile(r"^(?:(?P<const>[01])|r(?P<rec>\d+)|d(?P<off>\d+))$")


@dataclass(frozen=True)
class Expr:
    """``constant ^ (xor of records) ^ (xor of offset bits)``."""

    constant: int = 0
    records: frozenset[int] = frozenset()
    offsets: frozenset[int] = frozenset()

    @classmethod
    def const(cls, bit: int) -> Expr:
        return cls(constant=bit & 1)

    @classmethod
    def record(cls, index: int) -> Expr:
        return cls(records=frozenset([index]))

    @classmethod
    def offset(cls, k: int) -> Expr:
        return cls(offsets=frozenset([k]))

    def __xor__(self, other: Expr | int) -> Expr:
        if isinstance(other, int):
            return replace(self, constant=self.constant ^ (other & 1))
        return Expr(
            self.constant ^ other.constant,
            self.records ^ other.records,
            self.offsets ^ other.offsets,
        )

    __rxor__ = __xor__

    @property
    def is_constant(self) -> bool:
        return not self.records and not self.offsets

    def bind(self, d: int) -> Expr:
        """Resolve offset terms against the concrete offset ``d``."""
        flip = sum((d >> k) & 1 for k in self.offsets) & 1
        return Expr(self.constant ^ flip, self.records, frozenset())

    def evaluate(self, records: Sequence[int], d: int | None = None) -> int:
        if self.offsets and d is None:
            raise ValueError(f"unresolved offset terms in {self}")
        value = self.constant
        for r in self.records:
            value ^= records[r]
        for k in self.offsets:
            value ^= (d >> k) & 1
        return value

    def __str__(self) -> str:
        terms = []
        if self.constant:
            terms.append("1")
        terms += [f"r{r}" for r in sorted(self.records)]
        terms += [f"d{k}" for k in sorted(self.offsets)]
        return "^".join(terms) if terms else "0"

    @classmethod
    def parse(cls, text: str) -> Expr:
        out = cls()
        for raw in text.split("^"):
            m = _TERM.match(raw.strip())
            if m is None:
                raise ValueError(f"bad expression term {raw!r} in {text!r}")
            if m["const"] is not None:
                out = out ^ int(m["const"])
            elif m["rec"] is not None:
                out = out ^ cls.record(int(m["rec"]))
            else:
                out = out ^ cls.offset(int(m["off"]))
        return out


ONE = Expr.const(1)


@dataclass(frozen=True)
class Control:
    """Fires when the xor of ``qubits`` equals ``polarity``.

    A single qubit with polarity ``1`` is an ordinary control; more than one
    qubit is a parity (ZZ...Z) control.
    """

    qubits: tuple[int, ...]
    polarity: Expr = ONE

    @property
    def is_parity(self) -> bool:
        return len(self.qubits) > 1


@dataclass(frozen=True)
class Instruction:
    kind: str
    target: int
    controls: tuple[Control, ...] = ()
    condition: Expr | None = None
    record: int | None = None

    def __post_init__(self) -> None:
        # single-qubit controls first, so the document form round-trips exactly
        ordered = tuple(sorted(self.controls, key=lambda c: c.is_parity))
        object.__setattr__(self, "controls", ordered)

    @property
    def quantum_controls(self) -> tuple[Control, ...]:
        return tuple(c for c in self.controls if not c.is_parity)

    @property
    def parity_controls(self) -> tuple[Control, ...]:
        return tuple(c for c in self.controls if c.is_parity)

    def qubits(self) -> set[int]:
        out = {self.target}
        for c in self.controls:
            out.update(c.qubits)
        return out

    def exprs(self) -> Iterable[Expr]:
        for c in self.controls:
            yield c.polarity
        if self.condition is not None:
            yield self.condition


@dataclass(frozen=True)
class Span:
    name: str
    start: int
    length: int


@dataclass(frozen=True)
class Layout:
    spans: tuple[Span, ...]

    @classmethod
    def build(cls, *parts: tuple[str, int]) -> Layout:
        spans, start = [], 0
        for name, length in parts:
            if length > 0:
                spans.append(Span(name, start, length))
                start += length
        return cls(tuple(spans))

    @property
    def qubit_count(self) -> int:
        return sum(s.length for s in self.spans)

    def has(self, name: str) -> bool:
        return any(s.name == name for s in self.spans)

    def span(self, name: str) -> Span:
        for s in self.spans:
            if s.name == name:
                return s
        raise KeyError(f"layout has no span named {name!r}")

    def qubits(self, name: str) -> list[int]:
        if not self.has(name):
            return []
        s = self.span(name)
        return list(range(s.start, s.start + s.length))

    def labels(self) -> list[str]:
        out = []
        for s in self.spans:
            if s.length == 1 and s.name in ("carry_in", "control"):
                out.append(s.name)
            else:
                out += [f"{s.name}{i}" for i in range(s.length)]
        return out

    def with_span(self, name: str, length: int = 1) -> Layout:
        return Layout(self.spans + (Span(name, self.qubit_count, length),))


@dataclass(frozen=True)
class Circuit:
    layout: Layout
    instructions: tuple[Instruction, ...]
    offset_width: int
    offset: int | None = None
    meta: Mapping[str, object] = field(default_factory=dict, compare=False)

    @property
    def qubit_count(self) -> int:
        return self.layout.qubit_count

    @property
    def record_count(self) -> int:
        return sum(1 for ins in self.instructions if ins.kind == MEASURE_X_RESET)

    @property
    def is_symbolic(self) -> bool:
        return any(e.offsets for ins in self.instructions for e in ins.exprs())

    def with_instructions(self, instructions: Iterable[Instruction], **changes) -> Circuit:
        return replace(self, instructions=tuple(instructions), **changes)


def validate(circuit: Circuit) -> list[str]:
    """Return human-readable invariant violations; empty means valid."""
    problems: list[str] = []
    layout = circuit.layout
    q = layout.qubit_count

    cursor = 0
    for s in layout.spans:
        if s.length < 1:
            problems.append(f"span {s.name!r} has non-positive length")
        if s.start != cursor:
            problems.append(f"span {s.name!r} starts at {s.start}, expected {cursor}")
        cursor = s.start + s.length
    targets = [s for s in layout.spans if s.name == "target"]
    if len(targets) != 1:
        problems.append(f"expected exactly one target span, found {len(targets)}")
    elif targets[0].length != circuit.offset_width:
        problems.append(
            f"target span length {targets[0].length} != offset width {circuit.offset_width}"
        )

    seen_records: set[int] = set()
    for i, ins in enumerate(circuit.instructions):
        where = f"instruction {i}"
        if ins.kind not in KINDS:
            problems.append(f"{where}: unknown kind {ins.kind!r}")
        for qubit in ins.qubits():
            if not 0 <= qubit < q:
                problems.append(f"{where}: qubit {qubit} outside [0, {q})")
        if ins.kind == MEASURE_X_RESET:
            if ins.controls or ins.condition is not None:
                problems.append(f"{where}: measurement carries controls")
            if ins.record is None:
                problems.append(f"{where}: measurement without record index")
            elif ins.record != len(seen_records):
                problems.append(
                    f"{where}: record {ins.record} out of order (expected {len(seen_records)})"
                )
        elif ins.record is not None:
            problems.append(f"{where}: non-measurement carries a record index")
        if len(ins.controls) > 2:
            problems.append(f"{where}: {len(ins.controls)} controls exceeds Toffoli")
        for c in ins.controls:
            if not c.qubits:
                problems.append(f"{where}: empty control group")
            if len(set(c.qubits)) != len(c.qubits):
                problems.append(f"{where}: repeated qubit in a control group")
            if ins.target in c.qubits:
                problems.append(f"{where}: target {ins.target} also used as control")
        for e in ins.exprs():
            late = sorted(r for r in e.records if r not in seen_records)
            if late:
                problems.append(f"{where}: references record(s) {late} before measurement")
            bad = sorted(k for k in e.offsets if not 0 <= k < circuit.offset_width)
            if bad:
                problems.append(f"{where}: offset bit(s) {bad} outside width")
        if ins.kind == MEASURE_X_RESET and ins.record is not None:
            seen_records.add(ins.record)
    return problems


def lower_parity_controls(circuit: Circuit) -> Circuit:
    """Replace parity controls by CNOT fan-in onto each group's first qubit."""
    out: list[Instruction] = []
    for ins in circuit.instructions:
        if not any(c.is_parity for c in ins.controls):
            out.append(ins)
            continue
        pivots = {c.qubits[0] for c in ins.controls if c.is_parity}
        fan: list[Instruction] = []
        controls = []
        for c in ins.controls:
            if c.is_parity:
                if any(p in c.qubits[1:] for p in pivots):
                    raise ValueError("parity groups overlap on a pivot qubit; cannot lower")
                fan += [Instruction(X, c.qubits[0], (Control((src,)),)) for src in c.qubits[1:]]
                controls.append(Control(c.qubits[:1], c.polarity))
            else:
                controls.append(c)
        out += fan
        out.append(replace(ins, controls=tuple(controls)))
        out += reversed(fan)
    return circuit.with_instructions(out)


# --- structured text -------------------------------------------------------


def to_document(circuit: Circuit) -> dict:
    doc: dict = {"version": FORMAT_VERSION, "n": circuit.offset_width}
    if circuit.offset is not None:
        doc["offset"] = circuit.offset
    doc["layout"] = [{"name": s.name, "start": s.start, "len": s.length} for s in circuit.layout.spans]
    instructions = []
    for ins in circuit.instructions:
        item: dict = {"kind": ins.kind, "target": ins.target}
        q = [{"qubit": c.qubits[0], "polarity_expr": str(c.polarity)} for c in ins.quantum_controls]
        p = [{"qubits": list(c.qubits), "polarity_expr": str(c.polarity)} for c in ins.parity_controls]
        item["qcontrols"] = q
        item["parity_groups"] = p
        item["condition_expr"] = None if ins.condition is None else str(ins.condition)
        item["record"] = ins.record
        instructions.append(item)
    doc["instructions"] = instructions
    return doc


def from_document(doc: Mapping) -> Circuit:
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported circuit format version {doc.get('version')!r}")
    layout = Layout(tuple(Span(s["name"], s["start"], s["len"]) for s in doc["layout"]))
    instructions = []
    for item in doc["instructions"]:
        controls = [
            Control((c["qubit"],), Expr.parse(c["polarity_expr"])) for c in item.get("qcontrols", [])
        ]
        controls += [
            Control(tuple(c["qubits"]), Expr.parse(c["polarity_expr"]))
            for c in item.get("parity_groups", [])
        ]
        cond = item.get("condition_expr")
        instructions.append(
            Instruction(
                kind=item["kind"],
                target=item["target"],
                controls=tuple(controls),
                condition=None if cond is None else Expr.parse(cond),
                record=item.get("record"),
            )
        )
    return Circuit(layout, tuple(instructions), doc["n"], doc.get("offset"))


def dumps(circuit: Circuit) -> str:
    return json.dumps(to_document(circuit), indent=1, sort_keys=False) + "\n"


def loads(text: str) -> Circuit:
    return from_document(json.loads(text))


def _control_token(c: Control, qubit: int, group: str = "") -> str:
    tail = "" if c.polarity == ONE else f"[{c.polarity}]"
    if c.is_parity:
        return ("P" if qubit == c.qubits[0] else "p") + group + tail
    if c.polarity == Expr():
        return "O"
    return "@" + tail


def diagram(circuit: Circuit) -> str:
    """Column diagram: one row per qubit, one column per instruction.

    ``X``/``Z`` mark targets, ``M`` an X-basis measure+reset (with its record),
    ``@`` a control, ``O`` an inverted control, ``@[e]`` a control whose
    required value is the expression ``e``, and ``P``/``p`` parity-group members.
    A trailing ``if`` row shows classical conditions.
    """
    labels = circuit.layout.labels()
    rows: list[list[str]] = [[] for _ in labels]
    cond_row: list[str] = []
    for ins in circuit.instructions:
        col = {}
        if ins.kind == MEASURE_X_RESET:
            col[ins.target] = f"M:r{ins.record}"
        else:
            col[ins.target] = ins.kind
        touched = [ins.target]
        for gi, c in enumerate(ins.controls):
            for qb in c.qubits:
                tag = str(gi) if c.is_parity and len(ins.parity_controls) > 1 else ""
                tok = _control_token(c, qb, tag)
                col[qb] = tok if qb not in col else f"{col[qb]}&{tok}"
                touched.append(qb)
        lo, hi = min(touched), max(touched)
        cond = "" if ins.condition is None else str(ins.condition)
        width = max([len(t) for t in col.values()] + [len(cond), 1])
        for r in range(len(labels)):
            tok = col.get(r, "|" if lo < r < hi else "-")
            rows[r].append(tok.center(width, "-"))
        cond_row.append(cond.center(width))
    pad = max(len(s) for s in labels + ["if"])
    lines = [f"{lab.rjust(pad)}: -" + "-".join(cells) + "-" for lab, cells in zip(labels, rows)]
    if any(c.strip() for c in cond_row):
        lines.append(f"{'if'.rjust(pad)}:  " + " ".join(cond_row))
    return "\n".join(lines) + "\n"
