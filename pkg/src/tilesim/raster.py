"""Tile rasterization and the persistent framebuffer.

Each tile renders into freshly cleared tile-local buffers (the on-chip
memory of a tile-based GPU) and the result is written back to the
framebuffer as a separate, countable step.  The framebuffer itself is
never cleared between frames, which is what makes skipping a tile's
writeback meaningful.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .trace import Shader

CLEAR_COLOR = (0, 0, 0, 255)
CLEAR_DEPTH = 1.0

_NO_TEXTURE = np.zeros((1, 1, 4), dtype=np.uint8)


class Framebuffer:
    """RGBA8 color plus float32 depth, persistent across frames."""

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.color = np.empty((height, width, 4), dtype=np.uint8)
        self.depth = np.empty((height, width), dtype=np.float32)
        self.reset()

    def reset(self) -> None:
        self.color[:] = CLEAR_COLOR
        self.depth[:] = CLEAR_DEPTH

    def copy(self) -> "Framebuffer":
        fb = Framebuffer.__new__(Framebuffer)
        fb.width = self.width
        fb.height = self.height
        fb.color = self.color.copy()
        fb.depth = self.depth.copy()
        return fb


class TileBuffers:
    """Reusable tile-local color/depth storage."""

    def __init__(self, tile_size: int):
        self.tile_size = tile_size
        self.color = np.empty((tile_size, tile_size, 4), dtype=np.uint8)
        self.depth = np.empty((tile_size, tile_size), dtype=np.float32)

    def clear(self) -> None:
        self.color[:] = CLEAR_COLOR
        self.depth[:] = CLEAR_DEPTH


def candidate_pixel_range(bb_min: int, bb_max: int, lo: int, hi: int):
    """Pixels in [lo, hi] whose centers fall inside a snapped 16.8
    interval.  Returns an empty range (p0 > p1) when none do."""
    p0 = (bb_min + 127) >> 8
    p1 = (bb_max - 128) >> 8
    if p0 < lo:
        p0 = lo
    if p1 > hi:
        p1 = hi
    return p0, p1


def render_tile(
    buffers: TileBuffers,
    tile_x: int,
    tile_y: int,
    tile_size: int,
    width: int,
    height: int,
    tris,
    textures_by_id,
    memo_cache=None,
    crc_tables=None,
):
    """Rasterize one tile's triangle list into cleared tile buffers.

    Returns (fragments_shaded, texels_fetched, memo_hits, memo_lookups);
    the memo counters are zero unless a memo cache is supplied.
    """
    backend = kernels.ACTIVE
    buffers.clear()
    tile_x0 = tile_x * tile_size
    tile_y0 = tile_y * tile_size
    x_hi = min(tile_x0 + tile_size, width) - 1
    y_hi = min(tile_y0 + tile_size, height) - 1

    frags = 0
    texels = 0
    hits = 0
    lookups = 0
    for tri in tris:
        bb_min_x, bb_min_y, bb_max_x, bb_max_y = tri.bbox
        px0, px1 = candidate_pixel_range(bb_min_x, bb_max_x, tile_x0, x_hi)
        if px0 > px1:
            continue
        py0, py1 = candidate_pixel_range(bb_min_y, bb_max_y, tile_y0, y_hi)
        if py0 > py1:
            continue
        draw = tri.draw
        if draw.texture_id is not None:
            tex = textures_by_id[draw.texture_id].texels
            has_tex = 1
        else:
            tex = _NO_TEXTURE
            has_tex = 0
        tint = draw.tint
        if memo_cache is None:
            f, t = backend.raster_tri(
                buffers.color, buffers.depth, tile_x0, tile_y0,
                px0, px1, py0, py1, tri.ivals(), tri.fvals(),
                int(draw.shader), tint[0], tint[1], tint[2], tint[3],
                tex, has_tex,
            )
        else:
            prefix, prefix_reg = memo_prefix(draw, textures_by_id)
            f, t, h, l = backend.raster_tri_memo(
                buffers.color, buffers.depth, tile_x0, tile_y0,
                px0, px1, py0, py1, tri.ivals(), tri.fvals(),
                int(draw.shader), tint[0], tint[1], tint[2], tint[3],
                tex, has_tex,
                memo_cache, prefix, prefix_reg, crc_tables,
            )
            hits += h
            lookups += l
        frags += f
        texels += t
    return frags, texels, hits, lookups


def memo_prefix(draw, textures_by_id):
    """Draw-constant 13 bytes of the fragment memo key (shader, tint,
    texture id and version) plus the CRC register advanced over them,
    cached on the draw and keyed by texture identity."""
    import struct

    from .crc import build_tables

    if draw.texture_id is not None:
        tex = textures_by_id[draw.texture_id]
        tex_id, tex_version = tex.texture_id, tex.version
    else:
        tex_id, tex_version = 0, 0
    cached = draw._cache.get("memo_prefix")
    if cached is not None and cached[0] == (tex_id, tex_version):
        return cached[1]
    prefix = struct.pack("<B4BII", int(draw.shader), *draw.tint, tex_id, tex_version)
    reg = 0xFFFFFFFF
    t0 = build_tables(1).rows[0]
    for byte in prefix:
        reg = (reg >> 8) ^ t0[(reg ^ byte) & 0xFF]
    result = ((tex_id, tex_version), (prefix, reg))
    draw._cache["memo_prefix"] = result
    return result[1]


def sample_texture(texture, u: float, v: float):
    """Nearest-texel fetch with repeat wrapping; the scalar reference
    for the kernels' inlined version."""
    import math

    def wrap(value, size):
        r = math.fmod(value, size)
        if r < 0.0:
            r += size
        return int(math.floor(r)) % size

    x = wrap(u * texture.width, texture.width)
    y = wrap(v * texture.height, texture.height)
    return tuple(int(c) for c in texture.texels[y, x])


def modulate(c1, c2):
    """Per-channel (a * b + 127) // 255, the round-to-nearest 8-bit
    fixed-point multiply."""
    return tuple((a * b + 127) // 255 for a, b in zip(c1, c2))


def shade_fragment(shader, tint, vertex_color=None, texel=None):
    """Scalar reference for final fragment color composition."""
    if shader is Shader.FLAT or shader == 0:
        return tuple(tint)
    if shader is Shader.GOURAUD or shader == 1:
        return modulate(vertex_color, tint)
    return modulate(modulate(texel, vertex_color), tint)


def write_ppm(path, color: np.ndarray) -> None:
    """Binary PPM (P6) dump of an RGBA buffer; alpha is dropped."""
    h, w = color.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(color[..., :3]).tobytes())
