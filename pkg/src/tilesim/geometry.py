"""Vertex transform, near-plane clipping, fixed-point snap, and tile
binning.

Screen space uses 16.8 fixed point (1 pixel = 256 units) with y growing
downward.  Pixel centers sit at ``px * 256 + 128``.  Clip space follows
the z-in-[0, w] convention; only the near plane is clipped
geometrically, triangles entirely beyond the far plane are dropped, and
partially-beyond fragments fail the depth test against the cleared
depth of 1.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TraceDataError
from .trace import DrawCommand, Shader

# Snapped coordinates must stay within +-2^20 pixels so the int64 edge
# functions in the kernels cannot overflow.
MAX_SNAPPED = 1 << 28

_F32 = np.float32


class ScreenTriangle:
    """One post-clip triangle with snapped coordinates and the exact
    per-vertex values rasterization consumes."""

    __slots__ = (
        "draw", "sx", "sy", "z", "iw", "colors", "u", "v",
        "sign", "area2", "bbox", "_ivals", "_fvals", "_record", "_record_crc",
    )

    def __init__(self, draw, sx, sy, z, iw, colors, u, v, sign, area2):
        self.draw = draw
        self.sx = sx          # (sx0, sx1, sx2) in 16.8
        self.sy = sy
        self.z = z            # float32-exact depth per vertex
        self.iw = iw          # float32-exact 1/w per vertex
        self.colors = colors  # ((r, g, b, a),) * 3, ints 0..255
        self.u = u            # float32-exact uv per vertex
        self.v = v
        self.sign = sign
        self.area2 = area2
        self.bbox = (min(sx), min(sy), max(sx), max(sy))
        self._ivals = None
        self._fvals = None
        self._record = None
        self._record_crc = None

    def ivals(self) -> np.ndarray:
        if self._ivals is None:
            self._ivals = np.array(
                [self.sx[0], self.sy[0], self.sx[1], self.sy[1],
                 self.sx[2], self.sy[2], self.sign],
                dtype=np.int64,
            )
        return self._ivals

    def fvals(self) -> np.ndarray:
        if self._fvals is None:
            vals = np.empty(25, dtype=np.float64)
            vals[0:3] = self.z
            vals[3:6] = self.iw
            for k in range(3):
                iw = self.iw[k]
                r, g, b, a = self.colors[k]
                vals[6 + 4 * k] = r * iw
                vals[7 + 4 * k] = g * iw
                vals[8 + 4 * k] = b * iw
                vals[9 + 4 * k] = a * iw
                vals[18 + k] = self.u[k] * iw
                vals[21 + k] = self.v[k] * iw
            vals[24] = float(self.area2)
            self._fvals = vals
        return self._fvals


def _transform(matrix, x: float, y: float, z: float):
    m = matrix
    cx = m[0] * x + m[1] * y + m[2] * z + m[3]
    cy = m[4] * x + m[5] * y + m[6] * z + m[7]
    cz = m[8] * x + m[9] * y + m[10] * z + m[11]
    cw = m[12] * x + m[13] * y + m[14] * z + m[15]
    return cx, cy, cz, cw


def _lerp_clip(a, b):
    # Intersection with the z = 0 plane; za >= 0 > zb or vice versa.
    t = a[2] / (a[2] - b[2])
    out = [va + t * (vb - va) for va, vb in zip(a, b)]
    out[2] = 0.0
    return tuple(out)


def _clip_near(poly):
    """Sutherland-Hodgman against z >= 0.  Input and output vertices are
    (x, y, z, w, r, g, b, a, u, v) tuples."""
    out = []
    n = len(poly)
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        a_in = a[2] >= 0.0
        b_in = b[2] >= 0.0
        if a_in:
            out.append(a)
            if not b_in:
                out.append(_lerp_clip(a, b))
        elif b_in:
            out.append(_lerp_clip(a, b))
    return out


def _quantize_channel(value: float) -> int:
    q = int(math.floor(value + 0.5))
    return 0 if q < 0 else 255 if q > 255 else q


def _snap(value: float) -> int:
    s = int(math.floor(value * 256.0 + 0.5))
    if not (-MAX_SNAPPED <= s <= MAX_SNAPPED):
        raise TraceDataError(
            f"screen coordinate {value / 1.0} out of the +-{MAX_SNAPPED >> 8} pixel range"
        )
    return s


def transform_and_assemble(draw: DrawCommand, width: int, height: int) -> list:
    """Transform one draw's vertices to screen space and emit the
    surviving ScreenTriangles in input order."""
    half_w = width * 0.5
    half_h = height * 0.5
    matrix = draw.matrix
    verts = draw.vertices
    tris = []
    for base in range(0, len(verts), 3):
        poly = []
        for vert in verts[base:base + 3]:
            cx, cy, cz, cw = _transform(matrix, vert.x, vert.y, vert.z)
            poly.append((cx, cy, cz, cw,
                         float(vert.r), float(vert.g), float(vert.b), float(vert.a),
                         vert.u, vert.v))
        clipped = _clip_near(poly)
        if len(clipped) < 3:
            continue
        for second in range(1, len(clipped) - 1):
            corner = (clipped[0], clipped[second], clipped[second + 1])
            if any(c[3] <= 0.0 for c in corner):
                continue  # projectively degenerate after clipping
            sx = []
            sy = []
            zs = []
            iws = []
            colors = []
            us = []
            vs = []
            for (cx, cy, cz, cw, r, g, b, a, u, v) in corner:
                x_ndc = cx / cw
                y_ndc = cy / cw
                z_ndc = cz / cw
                sx.append(_snap((x_ndc + 1.0) * half_w))
                sy.append(_snap((1.0 - y_ndc) * half_h))
                zs.append(float(_F32(z_ndc)))
                iws.append(float(_F32(1.0 / cw)))
                colors.append((
                    _quantize_channel(r), _quantize_channel(g),
                    _quantize_channel(b), _quantize_channel(a),
                ))
                us.append(float(_F32(u)))
                vs.append(float(_F32(v)))
            if zs[0] > 1.0 and zs[1] > 1.0 and zs[2] > 1.0:
                continue  # entirely beyond the far plane
            area2 = ((sx[1] - sx[0]) * (sy[2] - sy[0])
                     - (sy[1] - sy[0]) * (sx[2] - sx[0]))
            if area2 == 0:
                continue
            sign = 1 if area2 > 0 else -1
            tris.append(ScreenTriangle(
                draw, tuple(sx), tuple(sy), tuple(zs), tuple(iws),
                tuple(colors), tuple(us), tuple(vs), sign, abs(area2),
            ))
    return tris


def tile_span(bb_min: int, bb_max: int, tile_size: int, tile_count: int):
    """Inclusive tile-index range covered by a snapped 16.8 interval."""
    unit = tile_size << 8
    lo = max(0, bb_min // unit)
    hi = min(tile_count - 1, bb_max // unit)
    return lo, hi


@dataclass
class TileBinList:
    """Per-tile triangle lists for one frame, row-major tile order."""

    tiles_x: int
    tiles_y: int
    tile_size: int
    bins: list
    total_entries: int

    def tile_index(self, tx: int, ty: int) -> int:
        return ty * self.tiles_x + tx


def bin_triangles(tris, width: int, height: int, tile_size: int) -> TileBinList:
    """Assign each triangle to every tile its snapped bounding box
    overlaps.  Conservative: a binned triangle may cover no pixel
    centers inside the tile."""
    tiles_x = -(-width // tile_size)
    tiles_y = -(-height // tile_size)
    bins = [[] for _ in range(tiles_x * tiles_y)]
    total = 0
    for tri in tris:
        bb_min_x, bb_min_y, bb_max_x, bb_max_y = tri.bbox
        tx0, tx1 = tile_span(bb_min_x, bb_max_x, tile_size, tiles_x)
        ty0, ty1 = tile_span(bb_min_y, bb_max_y, tile_size, tiles_y)
        if tx0 > tx1 or ty0 > ty1:
            continue
        for ty in range(ty0, ty1 + 1):
            row = ty * tiles_x
            for tx in range(tx0, tx1 + 1):
                bins[row + tx].append(tri)
                total += 1
    return TileBinList(tiles_x, tiles_y, tile_size, bins, total)
