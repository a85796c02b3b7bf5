"""Transform, clip, snap, and binning.

Oracles: numpy matrix-vector products for the transform, hand-computed
viewport/snap values, an independent interval-overlap predicate for
binning, and case counting (0/3/4-gon) for the near clip.
"""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from tilesim.errors import TraceDataError
from tilesim.geometry import (
    MAX_SNAPPED,
    bin_triangles,
    tile_span,
    transform_and_assemble,
)
from tilesim.trace import IDENTITY_MATRIX, DrawCommand, Shader, Vertex


def flat_draw(vertices, matrix=IDENTITY_MATRIX, tint=(255, 255, 255, 255)):
    return DrawCommand(0, Shader.FLAT, matrix, tint, [v.quantized() for v in vertices])


def tri(points, z=0.5, color=(10, 20, 30, 255)):
    return [Vertex(x, y, z, *color) for x, y in points]


def test_viewport_mapping_matches_hand_values():
    # x_ndc 0.5, y_ndc -0.25 on a 128x64 screen: xs = 1.5*64 = 96 px,
    # ys = 1.25*32 = 40 px, snapped at 256 units per pixel.
    draw = flat_draw(tri([(0.5, -0.25), (-1.0, -1.0), (0.0, 1.0)]))
    out = transform_and_assemble(draw, 128, 64)
    assert len(out) == 1
    assert out[0].sx[0] == 96 * 256
    assert out[0].sy[0] == 40 * 256
    assert out[0].sx[1] == 0
    assert out[0].sy[1] == 64 * 256


def test_transform_follows_row_major_convention():
    rng = random.Random(3)
    checked = 0
    for _ in range(80):
        # Bottom row biased so w stays positive often enough to sample
        # the no-clip path; the top rows stay fully random.
        entries = [rng.uniform(-2, 2) for _ in range(12)]
        entries += [rng.uniform(-0.2, 0.2) for _ in range(3)] + [rng.uniform(0.5, 2.0)]
        matrix = tuple(float(np.float32(e)) for e in entries)
        verts = [
            v.quantized()
            for v in tri([(rng.uniform(-1, 1), rng.uniform(-1, 1)) for _ in range(3)],
                         z=rng.uniform(0.0, 1.0))
        ]

        def rows(v):
            # Same row-major convention and summation order, derived
            # independently of the implementation.
            return [
                matrix[4 * i] * v.x + matrix[4 * i + 1] * v.y
                + matrix[4 * i + 2] * v.z + matrix[4 * i + 3]
                for i in range(4)
            ]

        homs = [rows(v) for v in verts]
        # Restrict to the no-clip case so output vertex order matches
        # input order.
        if any(h[2] < 0.0 or h[3] <= 1e-3 for h in homs):
            continue
        draw = flat_draw(verts, matrix=matrix)
        out = transform_and_assemble(draw, 64, 64)
        if not out:
            continue
        checked += 1
        for k in range(3):
            hom = homs[k]
            assert out[0].iw[k] == float(np.float32(1.0 / hom[3]))
            assert out[0].z[k] == float(np.float32(hom[2] / hom[3]))
    assert checked >= 10


def test_clip_vertex_counts_by_case():
    # z here is model z; identity matrix keeps it as clip z.
    fully_in = flat_draw(tri([(0, 0), (0.5, 0), (0, 0.5)], z=0.5))
    assert len(transform_and_assemble(fully_in, 64, 64)) == 1
    fully_out = flat_draw(tri([(0, 0), (0.5, 0), (0, 0.5)], z=-0.5))
    assert transform_and_assemble(fully_out, 64, 64) == []
    one_out = flat_draw([
        Vertex(0.0, 0.0, -0.5, 1, 2, 3, 4),
        Vertex(0.8, 0.0, 0.5, 1, 2, 3, 4),
        Vertex(0.0, 0.8, 0.5, 1, 2, 3, 4),
    ])
    assert len(transform_and_assemble(one_out, 64, 64)) == 2  # quad, fanned
    two_out = flat_draw([
        Vertex(0.0, 0.0, 0.5, 1, 2, 3, 4),
        Vertex(0.8, 0.0, -0.5, 1, 2, 3, 4),
        Vertex(0.0, 0.8, -0.5, 1, 2, 3, 4),
    ])
    assert len(transform_and_assemble(two_out, 64, 64)) == 1


def test_clip_crossing_point_interpolation():
    # Edge from (x=0, z=0.5) to (x=0.8, z=-0.3): t = 0.5/0.8, crossing
    # x = 0.5. The crossing vertex snaps exactly and z is forced to 0.
    draw = flat_draw([
        Vertex(0.0, 0.0, 0.5, 0, 0, 0, 255),
        Vertex(0.8, 0.0, -0.3, 0, 0, 0, 255),
        Vertex(0.0, 0.8, 0.5, 0, 0, 0, 255),
    ])
    out = transform_and_assemble(draw, 64, 64)
    zs = sorted(z for t in out for z in t.z)
    assert zs[0] == 0.0
    xs = sorted(x for t in out for x in t.sx)
    t = 0.5 / (0.5 - float(np.float32(-0.3)))
    crossing_px = (0.8 * t + 1.0) * 32.0
    assert int(math.floor(crossing_px * 256.0 + 0.5)) in xs


def test_degenerate_and_rejection_paths():
    collinear = flat_draw(tri([(0.0, 0.0), (0.25, 0.25), (0.5, 0.5)]))
    assert transform_and_assemble(collinear, 64, 64) == []
    beyond_far = flat_draw(tri([(0, 0), (0.5, 0), (0, 0.5)], z=1.5))
    assert transform_and_assemble(beyond_far, 64, 64) == []
    # w <= 0 with z >= 0 survives the clip but is projectively unusable.
    neg_w = tuple(
        -v if i >= 12 else v for i, v in enumerate(IDENTITY_MATRIX)
    )
    flipped = flat_draw(tri([(0, 0), (0.5, 0), (0, 0.5)], z=0.5), matrix=neg_w)
    assert transform_and_assemble(flipped, 64, 64) == []


def test_snap_range_guard():
    huge = tuple(
        1e5 if i == 3 else v for i, v in enumerate(IDENTITY_MATRIX)
    )
    draw = flat_draw(tri([(0, 0), (0.5, 0), (0, 0.5)]), matrix=huge)
    with pytest.raises(TraceDataError, match="pixel range"):
        transform_and_assemble(draw, 256, 256)
    assert MAX_SNAPPED == 1 << 28


def test_winding_sign_and_layout():
    pts = [(0.0, 0.5), (-0.5, -0.5), (0.5, -0.5)]
    ccw_screen = flat_draw(tri(pts))  # y flip makes screen order cw
    out = transform_and_assemble(ccw_screen, 64, 64)[0]
    reversed_draw = flat_draw(tri(pts[::-1]))
    flipped = transform_and_assemble(reversed_draw, 64, 64)[0]
    assert out.sign == -flipped.sign
    assert out.area2 == flipped.area2 > 0

    ivals = out.ivals()
    assert ivals.dtype == np.int64
    assert list(ivals[:6]) == [out.sx[0], out.sy[0], out.sx[1], out.sy[1], out.sx[2], out.sy[2]]
    assert ivals[6] == out.sign
    assert out.ivals() is ivals  # cached

    fvals = out.fvals()
    assert fvals.dtype == np.float64
    for k in range(3):
        assert fvals[k] == out.z[k]
        assert fvals[3 + k] == out.iw[k]
        assert fvals[6 + 4 * k] == out.colors[k][0] * out.iw[k]
        assert fvals[9 + 4 * k] == out.colors[k][3] * out.iw[k]
        assert fvals[18 + k] == out.u[k] * out.iw[k]
        assert fvals[21 + k] == out.v[k] * out.iw[k]
    assert fvals[24] == float(out.area2)


def test_tile_span_boundaries():
    unit = 16 << 8
    assert tile_span(0, unit - 1, 16, 4) == (0, 0)
    assert tile_span(unit, unit, 16, 4) == (1, 1)
    assert tile_span(-5000, unit * 9, 16, 4) == (0, 3)
    assert tile_span(unit * 2 + 1, unit * 3 - 1, 16, 4) == (2, 2)


def test_binning_matches_interval_overlap_oracle():
    rng = random.Random(11)
    width = height = 128
    tile_size = 16
    tiles = 8
    draws = []
    for _ in range(40):
        pts = [(rng.uniform(-1.4, 1.4), rng.uniform(-1.4, 1.4)) for _ in range(3)]
        draws.append(flat_draw(tri(pts, z=rng.uniform(0, 1))))
    tris = [t for d in draws for t in transform_and_assemble(d, width, height)]
    binned = bin_triangles(tris, width, height, tile_size)
    assert binned.tiles_x == binned.tiles_y == tiles
    assert binned.total_entries == sum(len(b) for b in binned.bins)

    unit = tile_size << 8
    for ty in range(tiles):
        for tx in range(tiles):
            expected = [
                t for t in tris
                if t.bbox[0] < (tx + 1) * unit and t.bbox[2] >= tx * unit
                and t.bbox[1] < (ty + 1) * unit and t.bbox[3] >= ty * unit
            ]
            assert binned.bins[binned.tile_index(tx, ty)] == expected


def test_offscreen_triangles_bin_nowhere():
    draw = flat_draw(tri([(2.0, 2.0), (3.0, 2.0), (2.0, 3.0)]))
    tris = transform_and_assemble(draw, 64, 64)
    assert len(tris) == 1
    binned = bin_triangles(tris, 64, 64, 16)
    assert binned.total_entries == 0
