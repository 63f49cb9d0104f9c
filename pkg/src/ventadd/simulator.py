"""State-vector execution of circuits with X-basis measurement and feedback.

Amplitudes are real: every gate in the IR is a signed permutation and the
X-basis measurement only mixes amplitudes with factors of ``±1/sqrt(2)``.
Qubit ``q`` is bit ``q`` of the basis index.

Two engines share the instruction semantics:

* :func:`run` evolves a dense vector and forks at each measurement.
* :func:`run_basis` pushes a batch of computational basis inputs through one
  fixed assignment of measurement outcomes.  Under this gate set a basis
  state stays a single signed basis state, so the batch is just index and
  sign arrays; it is what makes exhaustive sweeps cheap.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import core
from .core import OffsetConstant
from .ir import MEASURE_X_RESET, X, Z, Circuit, Instruction, validate

__all__ = [
    "SimulationError",
    "BudgetExceeded",
    "DEFAULT_QUBIT_BUDGET",
    "DEFAULT_ENUMERATION_CAP",
    "BranchPolicy",
    "SimState",
    "qubit_budget",
    "pack",
    "unpack",
    "run",
    "run_basis",
    "iter_branches",
    "reference_unitary_apply",
    "equal_up_to_global_phase",
    "fidelity",
]

DEFAULT_QUBIT_BUDGET = 22
DEFAULT_ENUMERATION_CAP = 12
BUDGET_ENV = "VENTADD_SIM_BUDGET"

_INV_SQRT2 = 1 / math.sqrt(2)


class SimulationError(ValueError):
    pass


class BudgetExceeded(SimulationError):
    pass


def qubit_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    return int(raw) if raw else DEFAULT_QUBIT_BUDGET


@dataclass(frozen=True)
class BranchPolicy:
    """How measurement outcomes are chosen.

    ``enumerate_all`` forks on every outcome (capped at ``cap`` measurements),
    ``sampled`` follows ``count`` seeded trajectories, ``forced`` replays a
    fixed record assignment.
    """

    mode: str = "enumerate_all"
    seed: int = 0
    count: int = 1
    forced: tuple[int, ...] = ()
    cap: int = DEFAULT_ENUMERATION_CAP

    @classmethod
    def enumerate_all(cls, cap: int = DEFAULT_ENUMERATION_CAP) -> BranchPolicy:
        return cls("enumerate_all", cap=cap)

    @classmethod
    def sampled(cls, seed: int, count: int) -> BranchPolicy:
        return cls("sampled", seed=seed, count=count)

    @classmethod
    def forced_records(cls, records: Sequence[int]) -> BranchPolicy:
        return cls("forced", forced=tuple(records))


@dataclass
class SimState:
    amplitudes: np.ndarray
    records: tuple[int, ...] = ()
    branch_weight: float = 1.0


def pack(circuit: Circuit, **values: int) -> int:
    """Basis index with each named span holding the given integer."""
    index = 0
    for name, value in values.items():
        if not circuit.layout.has(name):
            if value:
                raise SimulationError(f"layout has no span {name!r}")
            continue
        span = circuit.layout.span(name)
        if not 0 <= value < (1 << span.length):
            raise SimulationError(f"value {value} does not fit span {name!r}")
        index |= value << span.start
    return index


def unpack(circuit: Circuit, index, name: str):
    """Integer held by span ``name`` (works elementwise on arrays)."""
    if not circuit.layout.has(name):
        return 0 * index
    span = circuit.layout.span(name)
    return (index >> span.start) & ((1 << span.length) - 1)


def _resolve_offset(circuit: Circuit, d: OffsetConstant | int | None) -> int | None:
    if isinstance(d, OffsetConstant):
        if d.width != circuit.offset_width:
            raise SimulationError(f"offset width {d.width} != circuit width {circuit.offset_width}")
        return d.value
    if d is None:
        return circuit.offset
    return d


def _check_runnable(circuit: Circuit, d: int | None) -> None:
    problems = validate(circuit)
    if problems:
        raise SimulationError("invalid circuit: " + "; ".join(problems[:3]))
    if d is None and circuit.is_symbolic:
        raise SimulationError("circuit has unresolved offset terms and no offset was given")
    if circuit.qubit_count > qubit_budget():
        raise BudgetExceeded(
            f"{circuit.qubit_count} qubits exceeds the simulation budget of {qubit_budget()}"
        )


class _Bits:
    """Lazily built per-qubit bit arrays over the basis index."""

    def __init__(self, size: int) -> None:
        self.index = np.arange(size, dtype=np.int64)
        self._cache: dict[int, np.ndarray] = {}

    def __getitem__(self, q: int) -> np.ndarray:
        if q not in self._cache:
            self._cache[q] = ((self.index >> q) & 1).astype(bool)
        return self._cache[q]


def _fire_mask(ins: Instruction, bits, records: Sequence[int], d: int | None):
    """Boolean mask of basis states where all controls are satisfied, or
    ``True``/``False`` when there are no quantum controls."""
    if ins.condition is not None and not ins.condition.evaluate(records, d):
        return False
    mask = True
    for c in ins.controls:
        parity = bits[c.qubits[0]]
        for q in c.qubits[1:]:
            parity = parity ^ bits[q]
        want = bool(c.polarity.evaluate(records, d))
        term = parity if want else ~parity
        mask = term if mask is True else mask & term
    return mask


def _apply_unitary(ins: Instruction, psi: np.ndarray, bits: _Bits, records, d) -> np.ndarray:
    fire = _fire_mask(ins, bits, records, d)
    if fire is False:
        return psi
    if ins.kind == X:
        flipped = psi[bits.index ^ (1 << ins.target)]
        return flipped if fire is True else np.where(fire, flipped, psi)
    if ins.kind == Z:
        hit = bits[ins.target] if fire is True else fire & bits[ins.target]
        return np.where(hit, -psi, psi)
    raise SimulationError(f"not a unitary instruction: {ins.kind}")


def _measure_x_reset(psi: np.ndarray, q: int, bits: _Bits, outcome: int) -> tuple[np.ndarray, float]:
    """Project qubit ``q`` onto ``|+>``/``|->`` and reset it to ``|0>``.

    Returns the normalized post-state and the outcome probability.
    """
    zero = ~bits[q]
    lo = psi[zero]
    hi = psi[bits.index[zero] | (1 << q)]
    proj = (lo - hi if outcome else lo + hi) * _INV_SQRT2
    prob = float(np.dot(proj, proj))
    out = np.zeros_like(psi)
    if prob > 0:
        out[zero] = proj / math.sqrt(prob)
    return out, prob


def _outcome_uniform(seed: int, trajectory: int, instruction: int) -> float:
    # counter-style keying: reproducible regardless of traversal order
    state = np.random.SeedSequence([seed, trajectory, instruction]).generate_state(2, np.uint32)
    return ((int(state[0]) << 21) ^ (int(state[1]) >> 11)) / float(1 << 53)


def run(
    circuit: Circuit,
    initial: int | np.ndarray,
    d: OffsetConstant | int | None = None,
    policy: BranchPolicy = BranchPolicy(),
) -> list[SimState]:
    """Simulate ``circuit`` from a basis index or a normalized real vector."""
    dval = _resolve_offset(circuit, d)
    _check_runnable(circuit, dval)
    size = 1 << circuit.qubit_count
    if isinstance(initial, (int, np.integer)):
        psi = np.zeros(size)
        psi[int(initial)] = 1.0
    else:
        psi = np.asarray(initial, dtype=float)
        if psi.shape != (size,):
            raise SimulationError(f"state has shape {psi.shape}, expected ({size},)")
    bits = _Bits(size)
    ops = circuit.instructions

    if policy.mode == "enumerate_all" and circuit.record_count > policy.cap:
        raise SimulationError(
            f"{circuit.record_count} measurements exceeds enumeration cap {policy.cap}"
        )

    def advance(state: SimState, start: int, choose) -> list[SimState]:
        psi, records, weight = state.amplitudes, list(state.records), state.branch_weight
        for pos in range(start, len(ops)):
            ins = ops[pos]
            if ins.kind != MEASURE_X_RESET:
                psi = _apply_unitary(ins, psi, bits, records, dval)
                continue
            outcomes = choose(pos, psi, ins.target)
            if len(outcomes) == 1:
                (m, post, p), = outcomes
                psi, weight = post, weight * p
                records.append(m)
                continue
            out = []
            for m, post, p in outcomes:
                if p <= 1e-15:
                    continue
                out += advance(SimState(post, tuple(records) + (m,), weight * p), pos + 1, choose)
            return out
        return [SimState(psi, tuple(records), weight)]

    start = SimState(psi)
    if policy.mode == "enumerate_all":

        def choose_all(pos, psi, q):
            return [(m, *_measure_x_reset(psi, q, bits, m)) for m in (0, 1)]

        return advance(start, 0, choose_all)

    if policy.mode == "forced":
        if len(policy.forced) != circuit.record_count:
            raise SimulationError("forced record assignment has the wrong length")
        counter = itertools.count()

        def choose_forced(pos, psi, q):
            m = policy.forced[next(counter)]
            return [(m, *_measure_x_reset(psi, q, bits, m))]

        return advance(start, 0, choose_forced)

    if policy.mode == "sampled":
        branches = []
        for t in range(policy.count):

            def choose_sampled(pos, psi, q, t=t):
                post0, p0 = _measure_x_reset(psi, q, bits, 0)
                if _outcome_uniform(policy.seed, t, pos) < p0:
                    return [(0, post0, p0)]
                return [(1, *_measure_x_reset(psi, q, bits, 1))]

            branches += advance(SimState(psi.copy()), 0, choose_sampled)
        return branches

    raise SimulationError(f"unknown branch mode {policy.mode!r}")


def iter_branches(circuit: Circuit, policy: BranchPolicy) -> Iterator[tuple[int, ...]]:
    """Record assignments selected by ``policy`` for use with :func:`run_basis`.

    Seeded sampling draws each record uniformly, keyed by ``(seed, sample,
    instruction index)``; for basis inputs every vent outcome has
    probability exactly one half.
    """
    count = circuit.record_count
    if policy.mode == "enumerate_all":
        if count > policy.cap:
            raise SimulationError(f"{count} measurements exceeds enumeration cap {policy.cap}")
        yield from itertools.product((0, 1), repeat=count)
    elif policy.mode == "forced":
        yield tuple(policy.forced)
    elif policy.mode == "sampled":
        positions = [i for i, ins in enumerate(circuit.instructions) if ins.kind == MEASURE_X_RESET]
        for t in range(policy.count):
            yield tuple(int(_outcome_uniform(policy.seed, t, p) >= 0.5) for p in positions)
    else:
        raise SimulationError(f"unknown branch mode {policy.mode!r}")


def run_basis(
    circuit: Circuit,
    inputs: np.ndarray,
    records: Sequence[int],
    d: OffsetConstant | int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Push basis inputs through one record assignment.

    Returns ``(outputs, signs)``: the output basis index and ``±1`` sign for
    each input.  Each branch has weight ``2**-record_count`` for any basis
    input, because a measured qubit is always in a definite Z state.
    """
    dval = _resolve_offset(circuit, d)
    _check_runnable(circuit, dval)
    if len(records) != circuit.record_count:
        raise SimulationError("record assignment has the wrong length")
    idx = np.array(inputs, dtype=np.int64, copy=True)
    sign = np.ones(idx.shape, dtype=np.int8)
    recs = list(records)
    for ins in circuit.instructions:
        t = ins.target
        if ins.kind == MEASURE_X_RESET:
            if recs[ins.record]:
                sign = np.where((idx >> t) & 1 == 1, -sign, sign)
            idx = idx & ~(1 << t)
            continue
        fire = _fire_mask(ins, _IndexBits(idx), recs, dval)
        if fire is False:
            continue
        if ins.kind == X:
            flip = np.int64(1 << t)
            idx = idx ^ flip if fire is True else np.where(fire, idx ^ flip, idx)
        else:
            hit = (idx >> t) & 1 == 1
            if fire is not True:
                hit = hit & fire
            sign = np.where(hit, -sign, sign)
    return idx, sign


class _IndexBits:
    def __init__(self, idx: np.ndarray) -> None:
        self.idx = idx

    def __getitem__(self, q: int) -> np.ndarray:
        return (self.idx >> q) & 1 == 1


def reference_unitary_apply(
    n: int, d: OffsetConstant | int, c0: int, state: np.ndarray
) -> np.ndarray:
    """Permute amplitudes of an ``n``-bit register by ``x -> x + d + c0``."""
    dval = d.value if isinstance(d, OffsetConstant) else d
    state = np.asarray(state)
    if state.shape[0] != 1 << n:
        raise SimulationError(f"state dimension {state.shape[0]} != 2**{n}")
    out = np.zeros_like(state)
    xs = np.arange(1 << n)
    out[core.reference_add(xs, dval, c0, n)] = state[xs]
    return out


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise SimulationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return abs(float(np.dot(a, b)))


def equal_up_to_global_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    return fidelity(a, b) >= 1 - tol
