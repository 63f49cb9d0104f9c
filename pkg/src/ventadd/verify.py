"""Correctness matrix for builder outputs against the integer oracles."""

from __future__ import annotations

import itertools
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import core
from .builders import build
from .ir import Circuit
from .simulator import (
    BranchPolicy,
    BudgetExceeded,
    fidelity,
    iter_branches,
    pack,
    qubit_budget,
    run,
    run_basis,
    unpack,
)

__all__ = ["Failure", "VerificationReport", "verify_builder", "default_policy"]

PHASE_TOL = 1e-9
WEIGHT_TOL = 1e-9
EXHAUSTIVE_VENTS = 8
SAMPLED_BRANCHES = 64


@dataclass(frozen=True)
class Failure:
    check: str
    d: int
    inputs: dict
    records: tuple[int, ...]
    detail: str

    def __str__(self) -> str:
        args = ", ".join(f"{k}={v}" for k, v in self.inputs.items())
        return f"[{self.check}] d={self.d} {args} records={list(self.records)}: {self.detail}"


@dataclass
class VerificationReport:
    builder: str
    n: int
    cases: Counter = field(default_factory=Counter)
    failures: list[Failure] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def __add__(self, other: VerificationReport) -> VerificationReport:
        return VerificationReport(
            self.builder, self.n, self.cases + other.cases, self.failures + other.failures
        )

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        counts = ", ".join(f"{k}={v}" for k, v in sorted(self.cases.items()))
        lines = [f"{status} {self.builder} n={self.n}: {counts}; failures={len(self.failures)}"]
        if self.failures:
            lines.append(f"first counterexample: {self.failures[0]}")
        return "\n".join(lines)


def default_policy(circuit: Circuit, seed: int = 0) -> BranchPolicy:
    if circuit.record_count <= EXHAUSTIVE_VENTS:
        return BranchPolicy.enumerate_all()
    return BranchPolicy.sampled(seed, SAMPLED_BRANCHES)


def _dirty_sample(width: int, seed: int, size: int = 16) -> list[int]:
    if width == 0:
        return [0]
    if (1 << width) <= size:
        return list(range(1 << width))
    rng = np.random.default_rng(seed)
    return sorted(int(v) for v in rng.choice(1 << width, size=size, replace=False))


def _expected(builder: str, n: int, d: int, x, c0, g):
    """Expected (target, dirty) for the builder's contract."""
    if builder == "carryxor":
        return x, g ^ (core.carry(x, d, c0, n) >> 1)
    return core.reference_add(x, d, c0, n), g


def _ledger_phase(circuit: Circuit, records: Sequence[int], n: int, d: int, c0: int, xs_out):
    """Outstanding ``±1`` owed by a bare streaming adder for outputs ``xs_out``."""
    ledger = circuit.meta.get("ledger")
    if ledger is None:
        return 1
    owed = np.zeros(np.shape(xs_out), dtype=np.int64)
    carries = core.carry(core.complement(xs_out, n), d, c0, n)
    for r, k in ledger:
        if records[r]:
            owed ^= (carries >> k) & 1
    return 1 - 2 * owed


def _check_offset(
    builder: str,
    circuit: Circuit,
    d: int,
    xs: Sequence[int],
    carries: Sequence[int],
    dirty_values: Sequence[int],
    policy: BranchPolicy,
    phase: bool,
) -> VerificationReport:
    n = circuit.offset_width
    report = VerificationReport(builder, n)
    grid = np.array(list(itertools.product(xs, carries, dirty_values)), dtype=np.int64)
    gx, gc, gg = grid[:, 0], grid[:, 1], grid[:, 2]
    inputs = np.array(
        [pack(circuit, target=int(x), carry_in=int(c), dirty=int(g)) for x, c, g in grid],
        dtype=np.int64,
    )
    want_t, want_g = _expected(builder, n, d, gx, gc, gg)

    for records in iter_branches(circuit, policy):
        out, _ = run_basis(circuit, inputs, records, d)
        checks = {
            "target": unpack(circuit, out, "target") == want_t,
            "dirty": unpack(circuit, out, "dirty") == want_g,
            "clean": unpack(circuit, out, "clean") == 0,
            "carry_in": unpack(circuit, out, "carry_in") == gc,
        }
        for name, ok in checks.items():
            report.cases[f"function:{name}"] += len(ok)
            for i in np.flatnonzero(~ok)[:1]:
                report.failures.append(
                    Failure(
                        f"function:{name}",
                        d,
                        {"x": int(gx[i]), "c0": int(gc[i]), "dirty": int(gg[i])},
                        tuple(records),
                        f"output index {int(out[i])}",
                    )
                )

    if not phase:
        return report

    for c0 in carries:
        report += _phase_check(builder, circuit, d, c0, xs, dirty_values, policy)
    return report


def _phase_check(builder, circuit, d, c0, xs, dirty_values, policy) -> VerificationReport:
    """Uniform superposition over (target, dirty) must map to the reference
    superposition on every branch, up to one global sign."""
    n = circuit.offset_width
    report = VerificationReport(builder, n)
    size = 1 << circuit.qubit_count
    grid = list(itertools.product(xs, dirty_values))
    amp = 1 / np.sqrt(len(grid))
    psi = np.zeros(size)
    ref = np.zeros(size)
    for x, g in grid:
        psi[pack(circuit, target=x, carry_in=c0, dirty=g)] = amp
        t, g2 = _expected(builder, n, d, x, c0, g)
        ref[pack(circuit, target=int(t), carry_in=c0, dirty=int(g2))] = amp

    branches = run(circuit, psi, d, policy)
    targets_out = unpack(circuit, np.arange(size), "target")
    total = 0.0
    for br in branches:
        total += br.branch_weight
        out = br.amplitudes * _ledger_phase(circuit, br.records, n, d, c0, targets_out)
        f = fidelity(ref, out)
        report.cases["phase"] += 1
        if f < 1 - PHASE_TOL:
            report.failures.append(
                Failure("phase", d, {"c0": c0}, br.records, f"|<ref|out>| = {f:.12f}")
            )
    if policy.mode == "enumerate_all":
        report.cases["weights"] += 1
        if abs(total - 1) > WEIGHT_TOL:
            report.failures.append(
                Failure("weights", d, {"c0": c0}, (), f"branch weights sum to {total!r}")
            )
    return report


def _job(args) -> VerificationReport:
    return _check_offset(*args)


def verify_builder(
    builder: str,
    n: int,
    d_values: Iterable[int] | None = None,
    *,
    xs: Sequence[int] | None = None,
    carries: Sequence[int] | None = None,
    dirty_values: Sequence[int] | None = None,
    policy: BranchPolicy | None = None,
    phase: bool = True,
    seed: int = 0,
    workers: int = 1,
    circuit: Circuit | None = None,
) -> VerificationReport:
    """Run the correctness matrix for ``builder`` at width ``n``.

    ``circuit`` overrides the built circuit (e.g. to check a mutant against
    the builder's contract).  Defaults: all offsets, all targets, both carry
    inputs, all dirty values up to 16 (else a seeded 16-value sample), and
    every branch when there are at most 8 vents (else 64 seeded branches).
    """
    if circuit is None:
        circuit = build(builder, n)
    if circuit.qubit_count > qubit_budget():
        raise BudgetExceeded(
            f"{builder} at n={n} needs {circuit.qubit_count} qubits; budget is {qubit_budget()}"
        )
    d_values = list(range(1 << n)) if d_values is None else list(d_values)
    xs = list(range(1 << n)) if xs is None else list(xs)
    if carries is None:
        carries = [0, 1] if circuit.layout.has("carry_in") else [0]
    if dirty_values is None:
        dirty_values = _dirty_sample(len(circuit.layout.qubits("dirty")), seed)
    if policy is None:
        policy = default_policy(circuit, seed)

    jobs = [(builder, circuit, d, xs, carries, dirty_values, policy, phase) for d in d_values]
    report = VerificationReport(builder, n)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_job, jobs))
    else:
        parts = [_job(j) for j in jobs]
    for part in parts:
        report += part
    return report
