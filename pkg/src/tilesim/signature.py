"""Per-tile input signatures.

Every triangle binned to a tile contributes one fixed-size record to
that tile's input stream; the stream's CRC32 plus its byte length form
the tile signature.  A tile whose signature and length both match the
previous frame received bit-identical rasterizer input, so its output
is guaranteed unchanged and rasterization can be skipped.

The record captures everything that can influence the tile's pixels:
shader, transform, tint, texture identity and content version, and the
post-clip per-vertex values the rasterizer actually consumes (snapped
coordinates, depth and 1/w bit patterns, quantized colors, uv bit
patterns).  Matrix and model-space positions never reach the
rasterizer, but the matrix is included so the record also identifies
the draw that produced it.

Signatures accumulate incrementally: records are CRC'd once and folded
into the per-tile value with a constant-time GF(2) composition instead
of re-hashing the whole stream.
"""

from __future__ import annotations

import struct

from .crc import crc32_sliced, crc_concat_op, shift_operator
from .errors import ContractViolation, SequencingError

PREFIX_SIZE = 77
VERTEX_SIZE = 28
RECORD_SIZE = PREFIX_SIZE + 3 * VERTEX_SIZE  # 161

_PREFIX_STRUCT = struct.Struct("<B16f4BII")
_VERTEX_STRUCT = struct.Struct("<iiff4Bff")

# Sentinel for draws with no texture; real textures always carry
# version >= 1, so (0, 0) cannot alias one.
NO_TEXTURE = (0, 0)


def record_prefix(draw, texture) -> bytes:
    """Draw-constant 77-byte record head, cached on the draw (keyed by
    texture identity so replacing a texture invalidates it)."""
    if texture is None:
        tex_id, tex_version = NO_TEXTURE
    else:
        if texture.version < 1:
            raise ContractViolation(
                f"texture {texture.texture_id} has version {texture.version}, expected >= 1"
            )
        tex_id, tex_version = texture.texture_id, texture.version
    cached = draw._cache.get("sig_prefix")
    if cached is not None and cached[0] == (tex_id, tex_version):
        return cached[1]
    blob = _PREFIX_STRUCT.pack(
        int(draw.shader), *draw.matrix, *draw.tint, tex_id, tex_version
    )
    draw._cache["sig_prefix"] = ((tex_id, tex_version), blob)
    return blob


def serialize_record(tri, texture) -> bytes:
    """The 161-byte signature record for one binned triangle."""
    if tri._record is None:
        parts = [record_prefix(tri.draw, texture)]
        for k in range(3):
            parts.append(_VERTEX_STRUCT.pack(
                tri.sx[k], tri.sy[k], tri.z[k], tri.iw[k],
                *tri.colors[k], tri.u[k], tri.v[k],
            ))
        tri._record = b"".join(parts)
    return tri._record


def record_crc(tri, texture, tables) -> int:
    """CRC32 of the triangle's record, cached; the value is independent
    of the table slicing width."""
    if tri._record_crc is None:
        tri._record_crc = crc32_sliced(serialize_record(tri, texture), tables)
    return tri._record_crc


class TileSignatureBuffer:
    """Double-buffered per-tile signature store.

    Call order per frame: accumulate() for every record, then
    compare_and_mark() once, then end_frame() once.
    """

    def __init__(self, tile_count: int):
        if tile_count < 1:
            raise ContractViolation("tile_count must be positive")
        self.tile_count = tile_count
        self.current = [0] * tile_count
        self.current_len = [0] * tile_count
        self.previous = [0] * tile_count
        self.previous_len = [0] * tile_count
        self.previous_valid = False
        self._phase = "accumulate"
        self._record_op = shift_operator(RECORD_SIZE)

    def accumulate(self, tile_index: int, crc_value: int,
                   byte_len: int = RECORD_SIZE) -> None:
        """Fold one record CRC into a tile's running signature."""
        if self._phase != "accumulate":
            raise SequencingError("accumulate after compare_and_mark")
        if byte_len == RECORD_SIZE:
            op = self._record_op
        else:
            op = shift_operator(byte_len)
        self.current[tile_index] = crc_concat_op(
            self.current[tile_index], crc_value, op
        )
        self.current_len[tile_index] += byte_len

    def compare_and_mark(self) -> list:
        """Per-tile skip decision: True when the previous frame's
        signature and stream length both match."""
        if self._phase != "accumulate":
            raise SequencingError("compare_and_mark called twice in one frame")
        self._phase = "compared"
        if not self.previous_valid:
            return [False] * self.tile_count
        cur, prev = self.current, self.previous
        cur_len, prev_len = self.current_len, self.previous_len
        return [
            cur[i] == prev[i] and cur_len[i] == prev_len[i]
            for i in range(self.tile_count)
        ]

    def end_frame(self) -> None:
        """Swap buffers; the frame just accumulated becomes the
        comparison baseline."""
        if self._phase != "compared":
            raise SequencingError("end_frame before compare_and_mark")
        self.current, self.previous = self.previous, self.current
        self.current_len, self.previous_len = self.previous_len, self.current_len
        self.previous_valid = True
        for i in range(self.tile_count):
            self.current[i] = 0
            self.current_len[i] = 0
        self._phase = "accumulate"

    def footprint_bytes(self) -> int:
        """Modeled on-chip cost: two 4-byte CRCs plus two 4-byte lengths
        per tile."""
        return self.tile_count * 16
