"""Frame trace model, text format, and texture synthesis.

A trace is a line-oriented text file:

    trace <width> <height> <tile_size>
    texture <id> <w> <h> pattern (checker | gradient | noise <seed>)
    texture <id> <w> <h> inline <w*h RGBA8 texels as 8-hex-digit tokens>
    frame
    draw <shader> matrix <16 floats> tint <rrggbbaa> [tex <id>]
    v <x> <y> <z> <r> <g> <b> <a> [<u> <v>]

Blank lines and lines starting with '#' are ignored.  Shaders are
``flat``, ``gouraud``, ``textured``.  Vertex positions, uv, and matrix
entries are quantized to 32-bit floats on load so a parsed trace is
bit-identical to one built programmatically with the same values.

An expectation sidecar (ground truth for redundancy tests) is one line
per frame:

    expect frame <n> redundant <tile indices...>

with 1-based frame numbers and row-major tile indices.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TraceParseError

MIN_TILE_SIZE = 4
MAX_TEXTURE_SIZE = 256
# Bound on |position|, |uv|, and matrix magnitudes; generous for any
# sane scene while keeping downstream fixed-point math in range.
MAX_COORD = 1.0e6

IDENTITY_MATRIX = (
    1.0, 0.0, 0.0, 0.0,
    0.0, 1.0, 0.0, 0.0,
    0.0, 0.0, 1.0, 0.0,
    0.0, 0.0, 0.0, 1.0,
)


class Shader(enum.IntEnum):
    FLAT = 0
    GOURAUD = 1
    TEXTURED = 2


_SHADER_NAMES = {Shader.FLAT: "flat", Shader.GOURAUD: "gouraud", Shader.TEXTURED: "textured"}
_SHADERS_BY_NAME = {v: k for k, v in _SHADER_NAMES.items()}


def _f32(value: float) -> float:
    return float(np.float32(value))


@dataclass(frozen=True)
class Vertex:
    """One vertex: model-space position, RGBA8 color, optional uv."""

    x: float
    y: float
    z: float
    r: int
    g: int
    b: int
    a: int
    u: float = 0.0
    v: float = 0.0

    def quantized(self) -> "Vertex":
        return Vertex(
            _f32(self.x), _f32(self.y), _f32(self.z),
            self.r, self.g, self.b, self.a,
            _f32(self.u), _f32(self.v),
        )


class Texture:
    """Immutable RGBA8 texel grid.  ``version`` increments whenever texel
    content is replaced between frames; it feeds tile signatures so
    stale texture data can never alias a previous frame."""

    def __init__(self, texture_id: int, texels: np.ndarray, version: int = 1,
                 source: tuple | None = None):
        texels = np.ascontiguousarray(texels, dtype=np.uint8)
        if texels.ndim != 3 or texels.shape[2] != 4:
            raise ValueError("texels must have shape (h, w, 4)")
        h, w = texels.shape[:2]
        _check_texture_dims(w, h)
        texels.setflags(write=False)
        self.texture_id = int(texture_id)
        self.texels = texels
        self.version = int(version)
        # How the texels were produced, for canonical serialization:
        # ("pattern", "checker"), ("pattern", "noise", seed), or None.
        self.source = source

    @property
    def width(self) -> int:
        return int(self.texels.shape[1])

    @property
    def height(self) -> int:
        return int(self.texels.shape[0])

    def with_texels(self, texels: np.ndarray) -> "Texture":
        """New content under the same id; bumps the version counter."""
        return Texture(self.texture_id, texels, self.version + 1, None)


def _check_texture_dims(w: int, h: int) -> None:
    ok = (
        1 <= w <= MAX_TEXTURE_SIZE
        and 1 <= h <= MAX_TEXTURE_SIZE
        and (w & (w - 1)) == 0
        and (h & (h - 1)) == 0
    )
    if not ok:
        raise ValueError(
            f"texture dimensions must be powers of two in [1, {MAX_TEXTURE_SIZE}], got {w}x{h}"
        )


def _splitmix64(v: int) -> int:
    mask = (1 << 64) - 1
    v = (v + 0x9E3779B97F4A7C15) & mask
    v = ((v ^ (v >> 30)) * 0xBF58476D1CE4E5B9) & mask
    v = ((v ^ (v >> 27)) * 0x94D049BB133111EB) & mask
    return v ^ (v >> 31)


def make_pattern(name: str, w: int, h: int, seed: int = 0) -> np.ndarray:
    """Deterministic built-in texel patterns."""
    texels = np.zeros((h, w, 4), dtype=np.uint8)
    if name == "checker":
        ys, xs = np.mgrid[0:h, 0:w]
        light = ((xs // 8 + ys // 8) & 1) == 0
        texels[light] = (230, 230, 230, 255)
        texels[~light] = (40, 40, 40, 255)
    elif name == "gradient":
        ys, xs = np.mgrid[0:h, 0:w]
        texels[..., 0] = np.minimum(2 * xs, 255)
        texels[..., 1] = np.minimum(2 * ys, 255)
        texels[..., 2] = 128
        texels[..., 3] = 255
    elif name == "noise":
        for y in range(h):
            for x in range(w):
                bits = _splitmix64((seed << 32) ^ (y * w + x))
                texels[y, x] = (bits & 0xFF, (bits >> 8) & 0xFF, (bits >> 16) & 0xFF, 255)
    else:
        raise ValueError(f"unknown pattern {name!r}")
    return texels


def pattern_texture(texture_id: int, name: str, w: int, h: int, seed: int = 0) -> Texture:
    source = ("pattern", name, seed) if name == "noise" else ("pattern", name)
    return Texture(texture_id, make_pattern(name, w, h, seed), 1, source)


@dataclass
class DrawCommand:
    """One draw call: a shader, uniforms, and a triangle list (every 3
    consecutive vertices form one triangle)."""

    draw_id: int
    shader: Shader
    matrix: tuple  # 16 row-major floats, float32-exact
    tint: tuple    # RGBA, 0..255
    vertices: list
    texture_id: int | None = None
    # Per-frame caches filled lazily by the signature/raster stages.
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def triangle_count(self) -> int:
        return len(self.vertices) // 3


@dataclass
class FrameTrace:
    """A full workload: screen geometry plus per-frame draw lists."""

    width: int
    height: int
    tile_size: int
    textures: list
    frames: list  # list of list[DrawCommand]

    def __post_init__(self):
        if self.tile_size < MIN_TILE_SIZE:
            raise ValueError(f"tile_size must be >= {MIN_TILE_SIZE}")
        if self.width < self.tile_size or self.height < self.tile_size:
            raise ValueError("width and height must be >= tile_size")
        ids = [t.texture_id for t in self.textures]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate texture ids")
        self.textures_by_id = {t.texture_id: t for t in self.textures}

    @property
    def tiles_x(self) -> int:
        return -(-self.width // self.tile_size)

    @property
    def tiles_y(self) -> int:
        return -(-self.height // self.tile_size)

    @property
    def tile_count(self) -> int:
        return self.tiles_x * self.tiles_y

    def with_tile_size(self, tile_size: int) -> "FrameTrace":
        return FrameTrace(self.width, self.height, tile_size, self.textures, self.frames)


def _parse_float(token: str, line_no: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise TraceParseError(line_no, f"bad {what} {token!r}") from None
    if not math.isfinite(value) or abs(value) > MAX_COORD:
        raise TraceParseError(line_no, f"{what} out of range: {token}")
    return value


def _parse_int(token: str, line_no: int, what: str, lo=None, hi=None) -> int:
    try:
        value = int(token)
    except ValueError:
        raise TraceParseError(line_no, f"bad {what} {token!r}") from None
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise TraceParseError(line_no, f"{what} out of range: {value}")
    return value


def _parse_tint(token: str, line_no: int) -> tuple:
    if len(token) != 8:
        raise TraceParseError(line_no, f"tint must be 8 hex digits, got {token!r}")
    try:
        raw = bytes.fromhex(token)
    except ValueError:
        raise TraceParseError(line_no, f"tint must be 8 hex digits, got {token!r}") from None
    return tuple(raw)


def parse_trace(text: str) -> FrameTrace:
    """Parse trace text; raises TraceParseError with a line number on any
    schema violation."""
    header = None
    textures = []
    frames = []
    current_draw = None
    seen_frame = False

    def close_draw(line_no):
        if current_draw is not None and len(current_draw.vertices) % 3 != 0:
            raise TraceParseError(
                line_no, f"draw {current_draw.draw_id} has {len(current_draw.vertices)} "
                "vertices, not a multiple of 3"
            )

    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        kind = tokens[0]

        if kind == "trace":
            if header is not None:
                raise TraceParseError(line_no, "duplicate trace header")
            if len(tokens) != 4:
                raise TraceParseError(line_no, "trace header needs width, height, tile_size")
            header = tuple(_parse_int(t, line_no, "trace dimension", lo=1) for t in tokens[1:])
            continue

        if header is None:
            raise TraceParseError(line_no, "first directive must be the trace header")

        if kind == "texture":
            if seen_frame:
                raise TraceParseError(line_no, "textures must be declared before the first frame")
            if len(tokens) < 5:
                raise TraceParseError(line_no, "texture needs id, width, height, and content")
            tex_id = _parse_int(tokens[1], line_no, "texture id", lo=0)
            w = _parse_int(tokens[2], line_no, "texture width", lo=1)
            h = _parse_int(tokens[3], line_no, "texture height", lo=1)
            mode = tokens[4]
            try:
                if mode == "pattern":
                    if len(tokens) < 6:
                        raise TraceParseError(line_no, "pattern needs a name")
                    name = tokens[5]
                    if name == "noise":
                        if len(tokens) != 7:
                            raise TraceParseError(line_no, "noise pattern needs a seed")
                        seed = _parse_int(tokens[6], line_no, "noise seed", lo=0)
                        tex = pattern_texture(tex_id, "noise", w, h, seed)
                    elif name in ("checker", "gradient"):
                        if len(tokens) != 6:
                            raise TraceParseError(line_no, "unexpected tokens after pattern name")
                        tex = pattern_texture(tex_id, name, w, h)
                    else:
                        raise TraceParseError(line_no, f"unknown pattern {name!r}")
                elif mode == "inline":
                    texel_tokens = tokens[5:]
                    if len(texel_tokens) != w * h:
                        raise TraceParseError(
                            line_no, f"inline texture needs {w * h} texels, got {len(texel_tokens)}"
                        )
                    texels = np.zeros((h, w, 4), dtype=np.uint8)
                    for i, tok in enumerate(texel_tokens):
                        if len(tok) != 8:
                            raise TraceParseError(line_no, f"bad texel {tok!r}")
                        try:
                            texels[i // w, i % w] = tuple(bytes.fromhex(tok))
                        except ValueError:
                            raise TraceParseError(line_no, f"bad texel {tok!r}") from None
                    tex = Texture(tex_id, texels, 1, ("inline",))
                else:
                    raise TraceParseError(line_no, f"unknown texture mode {mode!r}")
            except ValueError as exc:
                if isinstance(exc, TraceParseError):
                    raise
                raise TraceParseError(line_no, str(exc)) from None
            if any(t.texture_id == tex_id for t in textures):
                raise TraceParseError(line_no, f"duplicate texture id {tex_id}")
            textures.append(tex)
            continue

        if kind == "frame":
            if len(tokens) != 1:
                raise TraceParseError(line_no, "frame takes no arguments")
            close_draw(line_no)
            current_draw = None
            frames.append([])
            seen_frame = True
            continue

        if kind == "draw":
            if not seen_frame:
                raise TraceParseError(line_no, "draw before any frame")
            close_draw(line_no)
            if len(tokens) < 21 or tokens[2] != "matrix":
                raise TraceParseError(
                    line_no, "draw needs: shader, matrix <16 floats>, tint <hex8>"
                )
            shader_name = tokens[1]
            if shader_name not in _SHADERS_BY_NAME:
                raise TraceParseError(line_no, f"unknown shader {shader_name!r}")
            shader = _SHADERS_BY_NAME[shader_name]
            matrix = tuple(
                _f32(_parse_float(tok, line_no, "matrix entry")) for tok in tokens[3:19]
            )
            if tokens[19] != "tint":
                raise TraceParseError(line_no, "expected 'tint' after the matrix")
            tint = _parse_tint(tokens[20], line_no)
            texture_id = None
            rest = tokens[21:]
            if rest:
                if len(rest) != 2 or rest[0] != "tex":
                    raise TraceParseError(line_no, f"unexpected tokens {rest!r}")
                texture_id = _parse_int(rest[1], line_no, "texture id", lo=0)
                if not any(t.texture_id == texture_id for t in textures):
                    raise TraceParseError(line_no, f"unknown texture id {texture_id}")
            if shader is Shader.TEXTURED and texture_id is None:
                raise TraceParseError(line_no, "textured draw needs tex <id>")
            if shader is not Shader.TEXTURED and texture_id is not None:
                raise TraceParseError(line_no, f"{shader_name} draw cannot take a texture")
            current_draw = DrawCommand(
                draw_id=len(frames[-1]),
                shader=shader,
                matrix=matrix,
                tint=tint,
                vertices=[],
                texture_id=texture_id,
            )
            frames[-1].append(current_draw)
            continue

        if kind == "v":
            if current_draw is None:
                raise TraceParseError(line_no, "vertex outside a draw")
            expects_uv = current_draw.shader is Shader.TEXTURED
            n_expected = 10 if expects_uv else 8
            if len(tokens) != n_expected:
                raise TraceParseError(
                    line_no,
                    f"vertex needs {n_expected - 1} fields for a "
                    f"{_SHADER_NAMES[current_draw.shader]} draw",
                )
            x = _parse_float(tokens[1], line_no, "x")
            y = _parse_float(tokens[2], line_no, "y")
            z = _parse_float(tokens[3], line_no, "z")
            r, g, b, a = (
                _parse_int(t, line_no, "color channel", lo=0, hi=255) for t in tokens[4:8]
            )
            u = v = 0.0
            if expects_uv:
                u = _parse_float(tokens[8], line_no, "u")
                v = _parse_float(tokens[9], line_no, "v")
            current_draw.vertices.append(Vertex(x, y, z, r, g, b, a, u, v).quantized())
            continue

        raise TraceParseError(line_no, f"unknown directive {kind!r}")

    if header is None:
        raise TraceParseError(1, "missing trace header")
    close_draw(len(text.splitlines()))
    try:
        return FrameTrace(header[0], header[1], header[2], textures, frames)
    except ValueError as exc:
        raise TraceParseError(1, str(exc)) from None


def serialize_trace(trace: FrameTrace) -> str:
    """Canonical text for a trace; parse(serialize(t)) reproduces t."""
    lines = [f"trace {trace.width} {trace.height} {trace.tile_size}"]
    for tex in trace.textures:
        head = f"texture {tex.texture_id} {tex.width} {tex.height}"
        if tex.source and tex.source[0] == "pattern":
            if tex.source[1] == "noise":
                lines.append(f"{head} pattern noise {tex.source[2]}")
            else:
                lines.append(f"{head} pattern {tex.source[1]}")
        else:
            texels = " ".join(
                bytes(tex.texels[y, x]).hex()
                for y in range(tex.height)
                for x in range(tex.width)
            )
            lines.append(f"{head} inline {texels}")
    for frame in trace.frames:
        lines.append("frame")
        for draw in frame:
            matrix = " ".join(repr(v) for v in draw.matrix)
            tint = bytes(draw.tint).hex()
            line = f"draw {_SHADER_NAMES[draw.shader]} matrix {matrix} tint {tint}"
            if draw.texture_id is not None:
                line += f" tex {draw.texture_id}"
            lines.append(line)
            for vert in draw.vertices:
                base = (
                    f"v {vert.x!r} {vert.y!r} {vert.z!r} "
                    f"{vert.r} {vert.g} {vert.b} {vert.a}"
                )
                if draw.shader is Shader.TEXTURED:
                    base += f" {vert.u!r} {vert.v!r}"
                lines.append(base)
    return "\n".join(lines) + "\n"


def parse_expectations(text: str) -> list:
    """Parse an expectation sidecar into a list of per-frame redundant
    tile sets (index 0 holds frame 1)."""
    by_frame = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) < 4 or tokens[0] != "expect" or tokens[1] != "frame" or tokens[3] != "redundant":
            raise TraceParseError(line_no, "expected: expect frame <n> redundant <indices...>")
        frame_no = _parse_int(tokens[2], line_no, "frame number", lo=1)
        if frame_no in by_frame:
            raise TraceParseError(line_no, f"duplicate expectation for frame {frame_no}")
        by_frame[frame_no] = frozenset(
            _parse_int(t, line_no, "tile index", lo=0) for t in tokens[4:]
        )
    if not by_frame:
        return []
    count = max(by_frame)
    if set(by_frame) != set(range(1, count + 1)):
        raise TraceParseError(1, "expectation frames must cover 1..N without gaps")
    return [by_frame[n] for n in range(1, count + 1)]


def serialize_expectations(redundant_by_frame: list) -> str:
    lines = []
    for i, tiles in enumerate(redundant_by_frame, start=1):
        idx = " ".join(str(t) for t in sorted(tiles))
        lines.append(f"expect frame {i} redundant {idx}".rstrip())
    return "\n".join(lines) + "\n"
