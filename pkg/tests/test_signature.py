"""Tile input signatures and the double-buffered comparison store.

Oracle: signatures accumulated record-by-record must equal a direct
CRC32 of the concatenated record bytes, checked with zlib.
"""

from __future__ import annotations

import random
import struct
import zlib

import numpy as np
import pytest

from tilesim.crc import build_tables
from tilesim.errors import ContractViolation, SequencingError
from tilesim.geometry import transform_and_assemble
from tilesim.signature import (
    NO_TEXTURE,
    PREFIX_SIZE,
    RECORD_SIZE,
    VERTEX_SIZE,
    TileSignatureBuffer,
    record_crc,
    record_prefix,
    serialize_record,
)
from tilesim.trace import IDENTITY_MATRIX, DrawCommand, Shader, Vertex, pattern_texture


def make_tri(shader=Shader.FLAT, tint=(9, 8, 7, 255), texture_id=None, x0=0.0):
    draw = DrawCommand(0, shader, IDENTITY_MATRIX, tint, [
        Vertex(x0 + 0.1, 0.2, 0.3, 1, 2, 3, 4, 0.0, 1.0).quantized(),
        Vertex(x0 - 0.7, 0.2, 0.3, 5, 6, 7, 8, 1.0, 1.0).quantized(),
        Vertex(x0 + 0.1, -0.9, 0.3, 9, 10, 11, 12, 0.5, 0.0).quantized(),
    ], texture_id)
    tris = transform_and_assemble(draw, 64, 64)
    assert len(tris) == 1
    return tris[0]


def test_record_sizes_and_layout():
    assert PREFIX_SIZE == 77
    assert VERTEX_SIZE == 28
    assert RECORD_SIZE == 161
    tex = pattern_texture(5, "checker", 8, 8)
    tri = make_tri(Shader.TEXTURED, texture_id=5)
    record = serialize_record(tri, tex)
    assert len(record) == RECORD_SIZE
    assert record[0] == int(Shader.TEXTURED)
    matrix = struct.unpack_from("<16f", record, 1)
    assert matrix == IDENTITY_MATRIX
    assert record[65:69] == bytes((9, 8, 7, 255))
    assert struct.unpack_from("<II", record, 69) == (5, 1)
    sx0, sy0, z0, iw0 = struct.unpack_from("<iiff", record, PREFIX_SIZE)
    assert (sx0, sy0) == (tri.sx[0], tri.sy[0])
    assert z0 == np.float32(tri.z[0])
    assert iw0 == np.float32(tri.iw[0])


def test_untextured_record_uses_sentinel():
    tri = make_tri()
    record = serialize_record(tri, None)
    assert struct.unpack_from("<II", record, 69) == NO_TEXTURE


def test_texture_version_zero_rejected():
    tex = pattern_texture(5, "checker", 8, 8)
    tex.version = 0
    tri = make_tri(Shader.TEXTURED, texture_id=5)
    with pytest.raises(ContractViolation, match="version"):
        record_prefix(tri.draw, tex)


def test_prefix_cache_revalidates_on_texture_change():
    tex = pattern_texture(5, "checker", 8, 8)
    tri = make_tri(Shader.TEXTURED, texture_id=5)
    first = record_prefix(tri.draw, tex)
    assert record_prefix(tri.draw, tex) is first
    bumped = tex.with_texels(tex.texels.copy())
    second = record_prefix(tri.draw, bumped)
    assert second != first
    assert struct.unpack_from("<II", second, 69) == (5, 2)


def test_any_input_change_changes_the_record():
    base = serialize_record(make_tri(), None)
    variants = [
        serialize_record(make_tri(tint=(9, 8, 6, 255)), None),
        serialize_record(make_tri(x0=1.0 / 64.0), None),
        serialize_record(make_tri(shader=Shader.GOURAUD), None),
    ]
    for variant in variants:
        assert len(variant) == len(base)
        assert variant != base


def test_record_crc_matches_zlib_and_caches():
    tables = build_tables(4)
    tri = make_tri()
    value = record_crc(tri, None, tables)
    assert value == zlib.crc32(serialize_record(tri, None))
    assert record_crc(tri, None, tables) == value
    assert tri._record_crc == value


def accumulate_oracle(streams):
    return [zlib.crc32(stream) for stream in streams]


def test_signature_accumulation_equals_direct_crc():
    tables = build_tables(4)
    rng = random.Random(77)
    buf = TileSignatureBuffer(6)
    streams = [b""] * 6
    tris = [make_tri(x0=rng.choice([0.0, 0.25, -0.25])) for _ in range(24)]
    for tri in tris:
        tile = rng.randrange(6)
        buf.accumulate(tile, record_crc(tri, None, tables))
        streams[tile] += serialize_record(tri, None)
    # Frame 1 never skips.
    assert buf.compare_and_mark() == [False] * 6
    assert buf.current == accumulate_oracle(streams)
    assert buf.current_len == [len(s) for s in streams]
    buf.end_frame()
    assert buf.previous == accumulate_oracle(streams)


def test_skip_mask_semantics_across_frames():
    tables = build_tables(4)
    buf = TileSignatureBuffer(3)
    a = make_tri()
    b = make_tri(x0=0.25)

    buf.accumulate(0, record_crc(a, None, tables))
    buf.accumulate(1, record_crc(b, None, tables))
    assert buf.compare_and_mark() == [False, False, False]
    buf.end_frame()

    # Same content in tiles 0 and 1, tile 2 still empty: all match.
    buf.accumulate(0, record_crc(a, None, tables))
    buf.accumulate(1, record_crc(b, None, tables))
    assert buf.compare_and_mark() == [True, True, True]
    buf.end_frame()

    # Swap the tiles' contents: both must re-render.
    buf.accumulate(0, record_crc(b, None, tables))
    buf.accumulate(1, record_crc(a, None, tables))
    mask = buf.compare_and_mark()
    assert mask == [False, False, True]
    buf.end_frame()

    # Adding a second copy of the same record changes the stream.
    buf.accumulate(0, record_crc(b, None, tables))
    buf.accumulate(0, record_crc(b, None, tables))
    buf.accumulate(1, record_crc(a, None, tables))
    assert buf.compare_and_mark() == [False, True, True]


def test_order_sensitivity():
    tables = build_tables(4)
    a = make_tri()
    b = make_tri(x0=0.25)
    buf = TileSignatureBuffer(1)
    buf.accumulate(0, record_crc(a, None, tables))
    buf.accumulate(0, record_crc(b, None, tables))
    buf.compare_and_mark()
    buf.end_frame()
    buf.accumulate(0, record_crc(b, None, tables))
    buf.accumulate(0, record_crc(a, None, tables))
    assert buf.compare_and_mark() == [False]


def test_phase_machine_guards():
    buf = TileSignatureBuffer(1)
    with pytest.raises(SequencingError):
        buf.end_frame()
    buf.compare_and_mark()
    with pytest.raises(SequencingError):
        buf.compare_and_mark()
    with pytest.raises(SequencingError):
        buf.accumulate(0, 123)
    buf.end_frame()
    buf.accumulate(0, 123)  # accepted again after the swap


def test_variable_length_accumulation():
    tables = build_tables(4)
    buf = TileSignatureBuffer(1)
    blob_a = b"x" * 40
    blob_b = b"y" * 7
    buf.accumulate(0, zlib.crc32(blob_a), byte_len=40)
    buf.accumulate(0, zlib.crc32(blob_b), byte_len=7)
    buf.compare_and_mark()
    assert buf.current == [zlib.crc32(blob_a + blob_b)]
    assert buf.current_len == [47]


def test_footprint_and_validation():
    assert TileSignatureBuffer(256).footprint_bytes() == 4096
    with pytest.raises(ContractViolation):
        TileSignatureBuffer(0)
