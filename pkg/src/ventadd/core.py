"""Bit-level integer arithmetic shared by the circuit builders and the oracles.

Registers are little-endian: bit 0 is the least significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "OffsetConstant",
    "bit_at",
    "maj",
    "carry",
    "carry_out",
    "complement",
    "reference_add",
]


@dataclass(frozen=True)
class OffsetConstant:
    """The classical addend ``value`` together with the register width."""

    value: int
    width: int

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError(f"width must be positive, got {self.width}")
        if not 0 <= self.value < (1 << self.width):
            raise ValueError(f"offset {self.value} does not fit in {self.width} bits")

    def bit(self, k: int) -> int:
        return bit_at(self.value, k)

    def bits(self) -> list[int]:
        return [bit_at(self.value, k) for k in range(self.width)]


def bit_at(x: int, k: int) -> int:
    if k < 0:
        raise ValueError("bit index must be non-negative")
    return (x >> k) & 1


def maj(a: int, b: int, c: int) -> int:
    return (a + b + c) // 2


def complement(x: int, n: int) -> int:
    return (1 << n) - 1 - x


def carry(x: int, d: int, c0: int, n: int) -> int:
    """Carry word of ``x + d + c0`` truncated to ``n`` bits.

    Bit ``k`` is the carry flowing into position ``k``; bit 0 is ``c0``.
    """
    mask = (1 << n) - 1
    return (x ^ d ^ (x + d + c0)) & mask


def carry_out(x: int, d: int, c0: int, n: int) -> int:
    """The carry out of the top bit, i.e. bit ``n`` of ``x + d + c0``."""
    return ((x + d + c0) >> n) & 1


def reference_add(x: int, d: int, c0: int, n: int) -> int:
    return (x + d + c0) % (1 << n)
