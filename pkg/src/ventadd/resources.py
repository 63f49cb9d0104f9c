"""Static gate and workspace accounting for circuits."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .builders import MIN_WIDTH, bind_offset, build
from .ir import MEASURE_X_RESET, X, Z, Circuit, lower_parity_controls, validate

__all__ = [
    "ResourceReport",
    "LinearityReport",
    "count",
    "depth",
    "linearity_check",
    "lint_carry_in_control_only",
    "vent_count",
    "table",
    "SLOPES",
    "GOLDEN_TOFFOLI_OFFSETS",
]

# Toffoli slope per builder, matching n, 2n, 3n and 4n up to a constant.
SLOPES = {"stream": 1, "carryxor": 2, "add2c": 3, "add3c": 4}

# toffoli_count(16) - slope * 16, measured from this implementation and pinned.
GOLDEN_TOFFOLI_OFFSETS = {"stream": -1, "carryxor": -3, "add2c": -6, "add3c": -8}


@dataclass(frozen=True)
class ResourceReport:
    n: int
    d: int | None
    toffoli_count: int
    cx_count: int
    x_count: int
    z_count: int
    measure_count: int
    clean_ancillae: int
    dirty_ancillae: int
    depth: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1) + "\n"


def _controls(ins) -> int:
    return len(ins.controls)


def depth(circuit: Circuit) -> int:
    """Greedy as-soon-as-possible layering on shared qubits."""
    ready: dict[int, int] = {}
    deepest = 0
    for ins in circuit.instructions:
        qubits = ins.qubits()
        layer = max((ready.get(q, 0) for q in qubits), default=0) + 1
        for q in qubits:
            ready[q] = layer
        deepest = max(deepest, layer)
    return deepest


def count(circuit: Circuit) -> ResourceReport:
    problems = validate(circuit)
    if problems:
        raise ValueError("invalid circuit: " + "; ".join(problems[:3]))
    lowered = lower_parity_controls(circuit)
    raw = circuit.instructions
    return ResourceReport(
        n=circuit.offset_width,
        d=circuit.offset,
        toffoli_count=sum(1 for i in lowered.instructions if i.kind in (X, Z) and _controls(i) == 2),
        cx_count=sum(1 for i in raw if i.kind == X and _controls(i) == 1),
        x_count=sum(1 for i in raw if i.kind == X and _controls(i) == 0),
        z_count=sum(1 for i in raw if i.kind == Z),
        measure_count=sum(1 for i in raw if i.kind == MEASURE_X_RESET),
        clean_ancillae=len(circuit.layout.qubits("clean")),
        dirty_ancillae=len(circuit.layout.qubits("dirty")),
        depth=depth(circuit),
    )


def vent_count(circuit: Circuit) -> int:
    return circuit.record_count


def lint_carry_in_control_only(circuit: Circuit) -> bool:
    """True iff the ``carry_in`` qubit is never the target of an instruction."""
    if not circuit.layout.has("carry_in"):
        raise ValueError("circuit has no carry_in span")
    cin = set(circuit.layout.qubits("carry_in"))
    return not any(ins.target in cin for ins in circuit.instructions)


@dataclass
class LinearityReport:
    builder: str
    slope: int
    bound: int
    residuals: dict[int, int] = field(default_factory=dict)

    @property
    def min_residual(self) -> int:
        return min(self.residuals.values())

    @property
    def max_residual(self) -> int:
        return max(self.residuals.values())

    @property
    def spread(self) -> int:
        return self.max_residual - self.min_residual

    @property
    def passed(self) -> bool:
        return self.spread <= self.bound


def linearity_check(
    builder: str, ns: Iterable[int], slope: int | None = None, bound: int = 16
) -> LinearityReport:
    """Residual ``toffoli_count(n) - slope*n`` at the all-ones offset."""
    slope = SLOPES[builder] if slope is None else slope
    report = LinearityReport(builder, slope, bound)
    for n in ns:
        circuit = bind_offset(build(builder, n), (1 << n) - 1)
        report.residuals[n] = count(circuit).toffoli_count - slope * n
    return report


def table(reports: Sequence[ResourceReport]) -> str:
    cols = ("n", "toffoli_count", "clean_ancillae", "dirty_ancillae", "measure_count", "depth")
    heads = ("n", "toffoli", "clean", "dirty", "vents", "depth")
    rows = [heads] + [tuple(str(getattr(r, c)) for c in cols) for r in reports]
    widths = [max(len(row[i]) for row in rows) for i in range(len(cols))]
    return "\n".join("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in rows) + "\n"


def sweep_range(builder: str, lo: int | None, hi: int) -> range:
    return range(max(MIN_WIDTH[builder], lo or 0), hi + 1)
