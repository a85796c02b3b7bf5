"""Built-in workload generator with per-frame redundancy ground truth.

Each scene kind produces a trace plus, for every frame, the exact set
of tiles whose pixels are unchanged from the previous frame.  The
generator keeps that set computable in closed form through a few
self-imposed rules:

- Anything that moves or changes is an axis-aligned rectangle with odd
  edge coordinates and even sizes and steps.  Odd coordinates never lie
  on a tile boundary (tile sizes are even), so a rectangle's bounding
  box touches exactly the tiles it covers pixels in.
- Moving rectangles carry a gradient texture sampled one texel per
  pixel, so any translation changes every covered pixel.
- Elements get distinct blue channels (backgrounds below 91, texture
  mid-gray 128 scaled by per-draw tints) so covering or uncovering one
  always changes pixels.
- Static geometry is unrestricted.

Screens are powers of two and vertices sit on integer pixel
coordinates with w = 1, which keeps every transform and snap exact, so
"unchanged input" and "unchanged pixels" coincide tile by tile.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .trace import (
    DrawCommand, FrameTrace, Shader, Vertex, pattern_texture,
)

SCENE_KINDS = ("static", "moving_quad", "scroll", "camera_pan", "uniform_change")

WHITE = (255, 255, 255, 255)

MIN_SCENE_TILE = 4
MAX_SCENE_TILE = 64


@dataclass
class GeneratedScene:
    kind: str
    seed: int
    trace: FrameTrace
    # Per frame (index 0 = frame 1): frozenset of redundant tile
    # indices, i.e. tiles bit-identical to the previous frame.
    expectations: list


def _is_pow2(v: int) -> bool:
    return v > 0 and (v & (v - 1)) == 0


def _f32(v: float) -> float:
    return float(np.float32(v))


def _odd(v: int) -> int:
    return v | 1


def _pixel_matrix(width: int, height: int, offx: int = 0) -> tuple:
    """Maps integer pixel coordinates straight to clip space (w = 1),
    optionally panned right by ``offx`` pixels.  Every entry is exact
    in float32 for power-of-two screens."""
    return tuple(_f32(v) for v in (
        2.0 / width, 0.0, 0.0, offx * 2.0 / width - 1.0,
        0.0, -2.0 / height, 0.0, 1.0,
        0.0, 0.0, 1.0, 0.0,
        0.0, 0.0, 0.0, 1.0,
    ))


def _rect_vertices(x0, y0, w, h, z, corner_colors, corner_uvs=None) -> list:
    """Two triangles covering [x0, x0+w) x [y0, y0+h).  Corner order:
    top-left, top-right, bottom-left, bottom-right."""
    if corner_uvs is None:
        corner_uvs = ((0.0, 0.0),) * 4
    x1, y1 = x0 + w, y0 + h
    tl = (float(x0), float(y0)) + corner_colors[0] + corner_uvs[0]
    tr = (float(x1), float(y0)) + corner_colors[1] + corner_uvs[1]
    bl = (float(x0), float(y1)) + corner_colors[2] + corner_uvs[2]
    br = (float(x1), float(y1)) + corner_colors[3] + corner_uvs[3]
    out = []
    for cx, cy, r, g, b, a, u, v in (tl, tr, bl, tr, br, bl):
        out.append(Vertex(cx, cy, z, int(r), int(g), int(b), int(a), u, v).quantized())
    return out


def _tri_vertices(pts, z, colors) -> list:
    return [
        Vertex(float(x), float(y), z, *(int(c) for c in rgba)).quantized()
        for (x, y), rgba in zip(pts, colors)
    ]


def _span_tiles(x0, y0, w, h, tile_size, tiles_x, tiles_y) -> set:
    """Tiles containing the pixels of rect [x0, x0+w) x [y0, y0+h)."""
    tx0 = max(0, x0 // tile_size)
    tx1 = min(tiles_x - 1, (x0 + w - 1) // tile_size)
    ty0 = max(0, y0 // tile_size)
    ty1 = min(tiles_y - 1, (y0 + h - 1) // tile_size)
    out = set()
    for ty in range(ty0, ty1 + 1):
        for tx in range(tx0, tx1 + 1):
            out.add(ty * tiles_x + tx)
    return out


def _uv_rect(w, h, tw, th):
    """1:1 texel-per-pixel uv corners for a w x h rect over a tw x th
    texture; exact in float32 for even/pow2 operands."""
    return ((0.0, 0.0), (w / tw, 0.0), (0.0, h / th), (w / tw, h / th))


def _background_draw(draw_id, width, height, matrix):
    """Full-screen horizontal gradient, blue channel capped below the
    texture mid-gray used by textured elements."""
    left = (40.0, 60.0, 90.0, 255.0)
    right = (200.0, 180.0, 120.0, 255.0)
    verts = _rect_vertices(0, 0, width, height, 0.9, (left, right, left, right))
    return DrawCommand(draw_id, Shader.GOURAUD, matrix, WHITE, verts)


def _flat_tri(draw_id, matrix, pts, z, tint):
    verts = _tri_vertices(pts, z, (tuple(float(c) for c in WHITE),) * 3)
    return DrawCommand(draw_id, Shader.FLAT, matrix, tint, verts)


def generate_scene(kind: str, frames: int, seed: int = 0, width: int = 256,
                   height: int = 256, tile_size: int = 16) -> GeneratedScene:
    """Build a deterministic scene; same arguments, same trace."""
    if kind not in SCENE_KINDS:
        raise ConfigError(f"unknown scene kind {kind!r}; choose from {', '.join(SCENE_KINDS)}")
    if frames < 2:
        raise ConfigError("scenes need at least 2 frames")
    if not (_is_pow2(width) and _is_pow2(height)):
        raise ConfigError("scene width and height must be powers of two")
    if not _is_pow2(tile_size) or not MIN_SCENE_TILE <= tile_size <= MAX_SCENE_TILE:
        raise ConfigError(
            f"tile size must be a power of two in [{MIN_SCENE_TILE}, {MAX_SCENE_TILE}]"
        )
    if width < max(64, 4 * tile_size) or height < max(64, 4 * tile_size):
        raise ConfigError("screen must be at least 64 pixels and 4 tiles in each direction")
    rng = random.Random(f"{kind}:{seed}:{width}x{height}")
    builder = _BUILDERS[kind]
    return builder(frames, seed, rng, width, height, tile_size)


def _all_tiles(tiles_x, tiles_y) -> frozenset:
    return frozenset(range(tiles_x * tiles_y))


def _build_static(frames, seed, rng, width, height, tile_size):
    matrix = _pixel_matrix(width, height)
    checker = pattern_texture(1, "checker", 128, 128)
    noise = pattern_texture(2, "noise", 64, 64, rng.randrange(1 << 31))
    draws = [_background_draw(0, width, height, matrix)]

    cw, ch = width // 2, height // 2
    cx0, cy0 = width // 4, height // 4
    draws.append(DrawCommand(
        1, Shader.TEXTURED, matrix, WHITE,
        _rect_vertices(cx0, cy0, cw, ch, 0.5, ((255.0,) * 3 + (255.0,),) * 4,
                       _uv_rect(cw, ch, 128, 128)),
        texture_id=1,
    ))
    nw, nh = width // 4, height // 4
    nx0, ny0 = 9 * width // 16, height // 16
    draws.append(DrawCommand(
        2, Shader.TEXTURED, matrix, WHITE,
        _rect_vertices(nx0, ny0, nw, nh, 0.4, ((255.0,) * 3 + (255.0,),) * 4,
                       _uv_rect(nw, nh, 64, 64)),
        texture_id=2,
    ))

    flat_tints = ((200, 80, 30, 255), (60, 140, 60, 255), (150, 90, 200, 255))
    for k, tint in enumerate(flat_tints):
        ax = rng.randrange(0, width - width // 8)
        ay = rng.randrange(0, height - height // 8)
        pts = ((ax, ay + height // 8), (ax + width // 16, ay), (ax + width // 8, ay + height // 8))
        draws.append(_flat_tri(3 + k, matrix, pts, 0.3, tint))
    gx = rng.randrange(0, width - width // 8)
    gy = rng.randrange(0, height - height // 8)
    gpts = ((gx, gy), (gx + width // 8, gy + height // 16), (gx, gy + height // 8))
    gcolors = ((250.0, 60.0, 60.0, 255.0), (60.0, 250.0, 60.0, 255.0),
               (60.0, 60.0, 250.0, 255.0))
    draws.append(DrawCommand(
        6, Shader.GOURAUD, matrix, WHITE, _tri_vertices(gpts, 0.25, gcolors)
    ))

    trace = FrameTrace(width, height, tile_size, [checker, noise],
                       [list(draws) for _ in range(frames)])
    everything = _all_tiles(trace.tiles_x, trace.tiles_y)
    expectations = [frozenset()] + [everything] * (frames - 1)
    return GeneratedScene("static", seed, trace, expectations)


def _build_moving_quad(frames, seed, rng, width, height, tile_size):
    matrix = _pixel_matrix(width, height)
    gradient = pattern_texture(1, "gradient", 128, 128)
    size = 5 * width // 16  # even for pow2 widths >= 64
    step = 16

    statics = [_background_draw(0, width, height, matrix)]
    for k, tint in enumerate(((200, 80, 30, 255), (60, 140, 60, 255))):
        ax = rng.randrange(0, width - width // 8)
        ay = rng.randrange(0, height - height // 8)
        pts = ((ax, ay + height // 8), (ax + width // 16, ay),
               (ax + width // 8, ay + height // 8))
        statics.append(_flat_tri(1 + k, matrix, pts, 0.8, tint))

    x = _odd(rng.randrange(1, max(2, width - size - step - 1)))
    y = _odd(rng.randrange(1, max(2, height - size - step - 1)))
    dx = step * rng.choice((1, -1))
    dy = step * rng.choice((1, -1))
    positions = [(x, y)]
    for _ in range(frames - 1):
        nx = x + dx
        if nx < 1 or nx + size > width - 1:
            dx = -dx
            nx = x + dx
        ny = y + dy
        if ny < 1 or ny + size > height - 1:
            dy = -dy
            ny = y + dy
        x, y = nx, ny
        positions.append((x, y))

    uvs = _uv_rect(size, size, 128, 128)
    white4 = ((255.0, 255.0, 255.0, 255.0),) * 4
    frame_lists = []
    for (px, py) in positions:
        quad = DrawCommand(
            len(statics), Shader.TEXTURED, matrix, WHITE,
            _rect_vertices(px, py, size, size, 0.3, white4, uvs),
            texture_id=1,
        )
        frame_lists.append(list(statics) + [quad])

    trace = FrameTrace(width, height, tile_size, [gradient], frame_lists)
    tiles_x, tiles_y = trace.tiles_x, trace.tiles_y
    everything = _all_tiles(tiles_x, tiles_y)
    expectations = [frozenset()]
    for f in range(1, frames):
        ox, oy = positions[f - 1]
        nx, ny = positions[f]
        touched = (_span_tiles(ox, oy, size, size, tile_size, tiles_x, tiles_y)
                   | _span_tiles(nx, ny, size, size, tile_size, tiles_x, tiles_y))
        expectations.append(everything - touched)
    return GeneratedScene("moving_quad", seed, trace, expectations)


def _build_scroll(frames, seed, rng, width, height, tile_size):
    matrix = _pixel_matrix(width, height)
    gradient = pattern_texture(1, "gradient", 32, 32)
    band = height // 4  # tile-aligned: height >= 4 * tile_size
    bar_w = 22
    bar_h = (height // 6 - 2) // 2 * 2  # even, so bar edges avoid tile boundaries
    step = 16

    white4 = ((255.0, 255.0, 255.0, 255.0),) * 4
    statics = [
        DrawCommand(0, Shader.FLAT, matrix, (70, 70, 40, 255),
                    _rect_vertices(0, 0, width, band, 0.8, white4)),
        DrawCommand(1, Shader.FLAT, matrix, (50, 90, 60, 255),
                    _rect_vertices(0, height - band, width, band, 0.8, white4)),
        DrawCommand(2, Shader.FLAT, matrix, (90, 90, 20, 255),
                    _rect_vertices(0, band, width, height - 2 * band, 0.9, white4)),
    ]

    bar_tints = ((255, 255, 255, 255), (255, 255, 225, 255), (255, 255, 195, 255))
    bar_rows = [_odd(band + 1 + k * (height // 6)) for k in range(3)]
    starts = [_odd(rng.randrange(1, width - 1)) for _ in range(3)]

    def bar_draws(draw_id, frame_index, k):
        p = (starts[k] + step * frame_index) % width
        y0 = bar_rows[k]
        tint = bar_tints[k]
        v_hi = bar_h / 32
        out = []
        if p + bar_w <= width:
            uvs = ((0.0, 0.0), (bar_w / 32, 0.0), (0.0, v_hi), (bar_w / 32, v_hi))
            out.append(DrawCommand(
                draw_id, Shader.TEXTURED, matrix, tint,
                _rect_vertices(p, y0, bar_w, bar_h, 0.3, white4, uvs),
                texture_id=1,
            ))
        else:
            left_w = width - p
            u_split = left_w / 32
            uvs_a = ((0.0, 0.0), (u_split, 0.0), (0.0, v_hi), (u_split, v_hi))
            uvs_b = ((u_split, 0.0), (bar_w / 32, 0.0), (u_split, v_hi), (bar_w / 32, v_hi))
            out.append(DrawCommand(
                draw_id, Shader.TEXTURED, matrix, tint,
                _rect_vertices(p, y0, left_w, bar_h, 0.3, white4, uvs_a),
                texture_id=1,
            ))
            out.append(DrawCommand(
                draw_id + 1, Shader.TEXTURED, matrix, tint,
                _rect_vertices(0, y0, bar_w - left_w, bar_h, 0.3, white4, uvs_b),
                texture_id=1,
            ))
        return out

    frame_lists = []
    for f in range(frames):
        draws = list(statics)
        for k in range(3):
            draws.extend(bar_draws(len(draws), f, k))
        frame_lists.append(draws)

    trace = FrameTrace(width, height, tile_size, [gradient], frame_lists)
    tiles_x, tiles_y = trace.tiles_x, trace.tiles_y
    everything = _all_tiles(tiles_x, tiles_y)

    def bar_span(frame_index, k):
        p = (starts[k] + step * frame_index) % width
        y0 = bar_rows[k]
        tiles = set()
        if p + bar_w <= width:
            tiles |= _span_tiles(p, y0, bar_w, bar_h, tile_size, tiles_x, tiles_y)
        else:
            tiles |= _span_tiles(p, y0, width - p, bar_h, tile_size, tiles_x, tiles_y)
            tiles |= _span_tiles(0, y0, bar_w - (width - p), bar_h,
                                 tile_size, tiles_x, tiles_y)
        return tiles

    expectations = [frozenset()]
    for f in range(1, frames):
        touched = set()
        for k in range(3):
            touched |= bar_span(f - 1, k) | bar_span(f, k)
        expectations.append(everything - touched)
    return GeneratedScene("scroll", seed, trace, expectations)


def _build_camera_pan(frames, seed, rng, width, height, tile_size):
    gradient = pattern_texture(1, "gradient", 64, 64)
    quad = width // 4 + 2  # even
    step = 4
    off_max = (15 * width // 32) // step * step

    xs = [_odd(width // 32 + k * (width // 16) + 2 * rng.randrange(0, 4))
          for k in range(3)]
    ys = [_odd(height // 16 + k * (height // 4)) for k in range(3)]
    tints = ((255, 255, 255, 255), (255, 255, 225, 255), (255, 255, 195, 255))

    off = 0
    d = step
    offsets = [0]
    for _ in range(frames - 1):
        n = off + d
        if n < 0 or n > off_max:
            d = -d
            n = off + d
        off = n
        offsets.append(off)

    white4 = ((255.0, 255.0, 255.0, 255.0),) * 4
    uvs = _uv_rect(quad, quad, 64, 64)
    vertex_lists = [
        _rect_vertices(xs[k], ys[k], quad, quad, 0.5, white4, uvs)
        for k in range(3)
    ]

    frame_lists = []
    for f in range(frames):
        matrix = _pixel_matrix(width, height, offsets[f])
        frame_lists.append([
            DrawCommand(k, Shader.TEXTURED, matrix, tints[k],
                        vertex_lists[k], texture_id=1)
            for k in range(3)
        ])

    trace = FrameTrace(width, height, tile_size, [gradient], frame_lists)
    tiles_x, tiles_y = trace.tiles_x, trace.tiles_y
    everything = _all_tiles(tiles_x, tiles_y)

    def frame_span(f):
        tiles = set()
        for k in range(3):
            tiles |= _span_tiles(xs[k] + offsets[f], ys[k], quad, quad,
                                 tile_size, tiles_x, tiles_y)
        return tiles

    expectations = [frozenset()]
    for f in range(1, frames):
        expectations.append(everything - (frame_span(f - 1) | frame_span(f)))
    return GeneratedScene("camera_pan", seed, trace, expectations)


def _build_uniform_change(frames, seed, rng, width, height, tile_size):
    matrix = _pixel_matrix(width, height)
    rw, rh = width // 4, height // 4  # even
    rects = [
        (_odd(width // 16 + k * (width // 8)), _odd(height // 16 + k * (height // 8)))
        for k in range(4)
    ]
    shaders = (Shader.FLAT, Shader.GOURAUD, Shader.FLAT, Shader.GOURAUD)

    vertex_lists = []
    for k, (x0, y0) in enumerate(rects):
        z = 0.6 - 0.1 * k
        if shaders[k] is Shader.FLAT:
            colors = ((255.0, 255.0, 255.0, 255.0),) * 4
        else:
            # Channels >= 128 keep the tint-modulated output moving by
            # at least one step per frame.
            colors = tuple(
                (float(rng.randrange(128, 241)), float(rng.randrange(128, 241)),
                 float(rng.randrange(128, 241)), 255.0)
                for _ in range(4)
            )
        vertex_lists.append(_rect_vertices(x0, y0, rw, rh, z, colors))

    frame_lists = []
    for f in range(frames):
        level = 255 - 8 * (f % 28)
        tint = (level, level, level, 255)
        frame_lists.append([
            DrawCommand(k, shaders[k], matrix, tint, vertex_lists[k])
            for k in range(4)
        ])

    trace = FrameTrace(width, height, tile_size, [], frame_lists)
    tiles_x, tiles_y = trace.tiles_x, trace.tiles_y
    everything = _all_tiles(tiles_x, tiles_y)
    touched = set()
    for (x0, y0) in rects:
        touched |= _span_tiles(x0, y0, rw, rh, tile_size, tiles_x, tiles_y)
    steady = everything - touched
    expectations = [frozenset()] + [frozenset(steady)] * (frames - 1)
    return GeneratedScene("uniform_change", seed, trace, expectations)


_BUILDERS = {
    "static": _build_static,
    "moving_quad": _build_moving_quad,
    "scroll": _build_scroll,
    "camera_pan": _build_camera_pan,
    "uniform_change": _build_uniform_change,
}
