"""CRC32 engine and GF(2) composition operators.

Implements the reflected CRC-32 (generator polynomial 0x04C11DB7,
reflected form 0xEDB88320, initial register 0xFFFFFFFF, final XOR
0xFFFFFFFF) three ways:

- a bitwise reference (`crc32_bitwise`), the correctness anchor;
- table-driven slice-by-1/4/8 (`crc32_sliced`), the fast path;
- composition in GF(2) without touching message bytes: `crc_shift`
  appends zero bytes in O(log n), `crc_concat` joins two checksummed
  blocks, `crc_splice` re-checksums a message after an in-place block
  edit.

`raw_crc` is the same register process with zero init and zero final
XOR; it is linear over GF(2) (raw(A ^ B) == raw(A) ^ raw(B)), which is
what makes the composition operators work.

The checksum of the empty message is 0x00000000 under this convention.
"""

from __future__ import annotations

import functools

import numpy as np

from . import kernels
from .errors import ConfigError, ContractViolation

POLY_REFLECTED = 0xEDB88320
SUPPORTED_SLICE_COUNTS = (1, 4, 8)

_INIT = 0xFFFFFFFF
_XOROUT = 0xFFFFFFFF

# x^0 in the reflected bit order used by the register process: bit 31
# holds the constant term, so shifting the register right by one bit is
# multiplication by x.
_GF_ONE = 0x80000000


def _update_bitwise(reg: int, data) -> int:
    for byte in bytes(data):
        reg ^= byte
        for _ in range(8):
            reg = (reg >> 1) ^ (POLY_REFLECTED if reg & 1 else 0)
    return reg


def crc32_bitwise(data) -> int:
    """Reference checksum; every other implementation must match it bit
    for bit."""
    return _update_bitwise(_INIT, data) ^ _XOROUT


class CrcTables:
    """Lookup tables for slice-by-N: table 0 is the classic byte table,
    table k advances each table k-1 entry by one zero byte.  Instances
    are immutable and safe to share across threads."""

    __slots__ = ("array", "rows", "slice_count")

    def __init__(self, array: np.ndarray):
        array = np.ascontiguousarray(array, dtype=np.uint32)
        array.setflags(write=False)
        self.array = array
        self.rows = tuple(tuple(int(v) for v in row) for row in array)
        self.slice_count = int(array.shape[0])

    def update(self, reg: int, data) -> int:
        """Raw register update over ``data`` using the active kernel."""
        return int(kernels.ACTIVE.crc_update(reg, data, self))


@functools.lru_cache(maxsize=None)
def build_tables(slice_count: int = 4) -> CrcTables:
    if slice_count not in SUPPORTED_SLICE_COUNTS:
        raise ConfigError(
            f"slice_count must be one of {SUPPORTED_SLICE_COUNTS}, got {slice_count}"
        )
    table0 = []
    for b in range(256):
        r = b
        for _ in range(8):
            r = (r >> 1) ^ (POLY_REFLECTED if r & 1 else 0)
        table0.append(r)
    tables = [table0]
    for k in range(1, slice_count):
        prev = tables[k - 1]
        tables.append([(prev[b] >> 8) ^ table0[prev[b] & 0xFF] for b in range(256)])
    return CrcTables(np.array(tables, dtype=np.uint32))


def crc32_sliced(data, tables: CrcTables | None = None) -> int:
    """Table-driven checksum, equal to crc32_bitwise on every input."""
    t = tables if tables is not None else build_tables(4)
    return t.update(_INIT, data) ^ _XOROUT


def raw_crc(data, tables: CrcTables | None = None) -> int:
    """Register process with zero init and no final XOR; GF(2)-linear."""
    t = tables if tables is not None else build_tables(4)
    return t.update(0, data)


def advance_zero_byte(reg: int, tables: CrcTables | None = None) -> int:
    """One zero-byte register step, the unit that crc_shift composes."""
    t0 = (tables if tables is not None else build_tables(4)).rows[0]
    return (reg >> 8) ^ t0[reg & 0xFF]


def gf_mul(a: int, b: int) -> int:
    """Carry-less multiply modulo the CRC polynomial, in the reflected
    bit order (so gf_mul(_GF_ONE, r) == r)."""
    if a == 0 or b == 0:
        return 0
    m = 1 << 31
    p = 0
    while True:
        if a & m:
            p ^= b
            if (a & (m - 1)) == 0:
                break
        m >>= 1
        b = (b >> 1) ^ (POLY_REFLECTED if b & 1 else 0)
    return p


def _x_pow_8() -> int:
    v = _GF_ONE
    for _ in range(8):
        v = (v >> 1) ^ (POLY_REFLECTED if v & 1 else 0)
    return v


def _build_shift_powers() -> tuple[int, ...]:
    # powers[i] == x^(8 * 2^i) mod P, enough for byte counts below 2^64.
    powers = []
    p = _x_pow_8()
    for _ in range(64):
        powers.append(p)
        p = gf_mul(p, p)
    return tuple(powers)


_SHIFT_POWERS = _build_shift_powers()


def crc_shift(raw: int, byte_count: int) -> int:
    """Raw CRC of the message extended by ``byte_count`` zero bytes,
    computed in O(log byte_count) GF(2) multiplies."""
    if byte_count < 0:
        raise ContractViolation(f"byte_count must be >= 0, got {byte_count}")
    r = raw & 0xFFFFFFFF
    i = 0
    n = byte_count
    while n:
        if n & 1:
            r = gf_mul(_SHIFT_POWERS[i], r)
        n >>= 1
        i += 1
    return r


@functools.lru_cache(maxsize=1024)
def shift_operator(byte_count: int) -> int:
    """GF constant c with gf_mul(c, r) == crc_shift(r, byte_count).
    Precompute it when shifting many values by the same distance."""
    if byte_count < 0:
        raise ContractViolation(f"byte_count must be >= 0, got {byte_count}")
    op = _GF_ONE
    i = 0
    n = byte_count
    while n:
        if n & 1:
            op = gf_mul(op, _SHIFT_POWERS[i])
        n >>= 1
        i += 1
    return op


def crc_concat(crc_a: int, crc_b: int, len_b: int) -> int:
    """Checksum of A||B from the checksums of A and B and len(B)."""
    if len_b < 0:
        raise ContractViolation(f"len_b must be >= 0, got {len_b}")
    return crc_shift(crc_a, len_b) ^ crc_b


def crc_concat_op(crc_a: int, crc_b: int, op: int) -> int:
    """crc_concat with the shift distance prebaked via shift_operator."""
    return gf_mul(op, crc_a) ^ crc_b


def crc_splice(full: int, old_block: bytes, new_block: bytes, tail_len: int) -> int:
    """Checksum of the message with ``old_block`` replaced in place by
    ``new_block`` (same length), where ``tail_len`` bytes follow the
    edited block.  Touches only the edited bytes."""
    if len(old_block) != len(new_block):
        raise ContractViolation(
            f"block lengths differ: {len(old_block)} vs {len(new_block)}"
        )
    if tail_len < 0:
        raise ContractViolation(f"tail_len must be >= 0, got {tail_len}")
    diff = bytes(x ^ y for x, y in zip(old_block, new_block))
    return full ^ crc_shift(raw_crc(diff), tail_len)
