"""Constant-workspace classical-quantum adders built from vented carries."""

from .builders import (
    VentLedger,
    apply_control,
    bind_offset,
    build,
    build_adder_2clean_ndirty,
    build_adder_3clean,
    build_carry_xor,
    build_streaming_adder,
)
from .core import OffsetConstant, bit_at, carry, carry_out, maj, reference_add
from .ir import Circuit, Expr, Instruction, lower_parity_controls, validate
from .resources import count, linearity_check, lint_carry_in_control_only
from .simulator import BranchPolicy, equal_up_to_global_phase, reference_unitary_apply, run
from .verify import verify_builder

__version__ = "0.1.0"

__all__ = [
    "VentLedger", "apply_control", "bind_offset", "build", "build_adder_2clean_ndirty",
    "build_adder_3clean", "build_carry_xor", "build_streaming_adder",
    "OffsetConstant", "bit_at", "carry", "carry_out", "maj", "reference_add",
    "Circuit", "Expr", "Instruction", "lower_parity_controls", "validate",
    "count", "linearity_check", "lint_carry_in_control_only",
    "BranchPolicy", "equal_up_to_global_phase", "reference_unitary_apply", "run",
    "verify_builder",
]
