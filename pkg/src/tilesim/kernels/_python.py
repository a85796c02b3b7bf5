"""Pure-Python kernel backend.

Reference implementation of the hot loops.  The compiled backend in
``_native.pyx`` mirrors these functions expression for expression; any
change here must be made there as well, in the same operation order,
because the two must produce bit-identical results.

Data layout shared with the native backend and the callers:

- ``ivals`` (int64[7]): snapped 16.8 fixed-point vertex coordinates
  ``sx0, sy0, sx1, sy1, sx2, sy2`` followed by the orientation sign
  ``s`` (+1 or -1).
- ``fvals`` (float64[25])::

      0..2   z0 z1 z2            screen-space depth per vertex
      3..5   iw0 iw1 iw2         inverse clip-space w per vertex
      6..17  (r g b a) * 3       vertex colors premultiplied by inv-w
      18..20 u0 u1 u2            u premultiplied by inv-w
      21..23 v0 v1 v2            v premultiplied by inv-w
      24     area2               positive doubled triangle area

Shader codes: 0 flat, 1 gouraud, 2 textured.
"""

from __future__ import annotations

import math

import numpy as np

_F32 = np.float32


def crc_update(reg: int, data, tables) -> int:
    """Advance a raw CRC register over ``data`` (no init/xorout applied)."""
    rows = tables.rows
    n = tables.slice_count
    t0 = rows[0]
    data = bytes(data)
    length = len(data)
    i = 0
    if n == 1:
        for b in data:
            reg = (reg >> 8) ^ t0[(reg ^ b) & 0xFF]
        return reg
    main = length - (length % n)
    if n == 4:
        t1, t2, t3 = rows[1], rows[2], rows[3]
        while i < main:
            w = reg ^ (
                data[i]
                | (data[i + 1] << 8)
                | (data[i + 2] << 16)
                | (data[i + 3] << 24)
            )
            reg = (
                t3[w & 0xFF]
                ^ t2[(w >> 8) & 0xFF]
                ^ t1[(w >> 16) & 0xFF]
                ^ t0[(w >> 24) & 0xFF]
            )
            i += 4
    else:
        t1, t2, t3, t4, t5, t6, t7 = (rows[k] for k in range(1, 8))
        while i < main:
            w = reg ^ (
                data[i]
                | (data[i + 1] << 8)
                | (data[i + 2] << 16)
                | (data[i + 3] << 24)
            )
            reg = (
                t7[w & 0xFF]
                ^ t6[(w >> 8) & 0xFF]
                ^ t5[(w >> 16) & 0xFF]
                ^ t4[(w >> 24) & 0xFF]
                ^ t3[data[i + 4]]
                ^ t2[data[i + 5]]
                ^ t1[data[i + 6]]
                ^ t0[data[i + 7]]
            )
            i += 8
    while i < length:
        reg = (reg >> 8) ^ t0[(reg ^ data[i]) & 0xFF]
        i += 1
    return reg


def _edge_setup(ivals):
    """Edge-function coefficients, orientation-normalized so the interior
    is strictly positive, plus the top-left inclusion threshold per edge
    (0 when an edge's zero set belongs to the triangle, 1 otherwise)."""
    sx0 = int(ivals[0])
    sy0 = int(ivals[1])
    sx1 = int(ivals[2])
    sy1 = int(ivals[3])
    sx2 = int(ivals[4])
    sy2 = int(ivals[5])
    s = int(ivals[6])
    # E_k vanishes on the edge opposite vertex k.
    a0 = s * (sy1 - sy2)
    b0 = s * (sx2 - sx1)
    c0 = -(a0 * sx1 + b0 * sy1)
    a1 = s * (sy2 - sy0)
    b1 = s * (sx0 - sx2)
    c1 = -(a1 * sx2 + b1 * sy2)
    a2 = s * (sy0 - sy1)
    b2 = s * (sx1 - sx0)
    c2 = -(a2 * sx0 + b2 * sy0)
    # Edge direction (dx, dy) after orientation flip; a pixel center that
    # lands exactly on an edge belongs to the triangle only for top edges
    # (horizontal, pointing +x) and left edges (pointing -y, y grows down).
    add = []
    for dx, dy in (
        (s * (sx2 - sx1), s * (sy2 - sy1)),
        (s * (sx0 - sx2), s * (sy0 - sy2)),
        (s * (sx1 - sx0), s * (sy1 - sy0)),
    ):
        top_left = (dy == 0 and dx > 0) or dy < 0
        add.append(0 if top_left else 1)
    return (a0, b0, c0, a1, b1, c1, a2, b2, c2, add[0], add[1], add[2])


def _wrap_texel(value: float, size: int) -> int:
    r = math.fmod(value, size)
    if r < 0.0:
        r += size
    i = int(math.floor(r)) % size
    return i


def _q8(value: float) -> int:
    q = int(math.floor(value + 0.5))
    if q < 0:
        return 0
    if q > 255:
        return 255
    return q


def raster_tri(
    color,
    depth,
    tile_x0: int,
    tile_y0: int,
    px0: int,
    px1: int,
    py0: int,
    py1: int,
    ivals,
    fvals,
    shader: int,
    tr: int,
    tg: int,
    tb: int,
    ta: int,
    tex,
    has_tex: int,
):
    """Rasterize one triangle over the inclusive pixel box [px0..px1] x
    [py0..py1] into tile-local color/depth buffers.  Returns
    (fragments_shaded, texels_fetched)."""
    (a0, b0, c0, a1, b1, c1, a2, b2, c2, add0, add1, add2) = _edge_setup(ivals)
    z0 = float(fvals[0])
    z1 = float(fvals[1])
    z2 = float(fvals[2])
    iw0 = float(fvals[3])
    iw1 = float(fvals[4])
    iw2 = float(fvals[5])
    cr0 = float(fvals[6])
    cg0 = float(fvals[7])
    cb0 = float(fvals[8])
    ca0 = float(fvals[9])
    cr1 = float(fvals[10])
    cg1 = float(fvals[11])
    cb1 = float(fvals[12])
    ca1 = float(fvals[13])
    cr2 = float(fvals[14])
    cg2 = float(fvals[15])
    cb2 = float(fvals[16])
    ca2 = float(fvals[17])
    u0 = float(fvals[18])
    u1 = float(fvals[19])
    u2 = float(fvals[20])
    v0 = float(fvals[21])
    v1 = float(fvals[22])
    v2 = float(fvals[23])
    area2 = float(fvals[24])
    if has_tex:
        th_, tw_ = tex.shape[0], tex.shape[1]
    else:
        th_ = tw_ = 1

    sx_step0, sx_step1, sx_step2 = a0 * 256, a1 * 256, a2 * 256
    sy_step0, sy_step1, sy_step2 = b0 * 256, b1 * 256, b2 * 256
    px_c = px0 * 256 + 128
    py_c = py0 * 256 + 128
    e0_row = a0 * px_c + b0 * py_c + c0
    e1_row = a1 * px_c + b1 * py_c + c1
    e2_row = a2 * px_c + b2 * py_c + c2

    frags = 0
    texels = 0
    for py in range(py0, py1 + 1):
        e0 = e0_row
        e1 = e1_row
        e2 = e2_row
        ty = py - tile_y0
        for px in range(px0, px1 + 1):
            if e0 >= add0 and e1 >= add1 and e2 >= add2:
                e0d = float(e0)
                e1d = float(e1)
                e2d = float(e2)
                z = (e0d * z0 + e1d * z1 + e2d * z2) / area2
                zf = float(_F32(z))
                tx = px - tile_x0
                if zf < float(depth[ty, tx]):
                    if shader == 0:
                        r = tr
                        g = tg
                        b = tb
                        a = ta
                    else:
                        iwd = e0d * iw0 + e1d * iw1 + e2d * iw2
                        rq = _q8((e0d * cr0 + e1d * cr1 + e2d * cr2) / iwd)
                        gq = _q8((e0d * cg0 + e1d * cg1 + e2d * cg2) / iwd)
                        bq = _q8((e0d * cb0 + e1d * cb1 + e2d * cb2) / iwd)
                        aq = _q8((e0d * ca0 + e1d * ca1 + e2d * ca2) / iwd)
                        if shader == 1:
                            r = (rq * tr + 127) // 255
                            g = (gq * tg + 127) // 255
                            b = (bq * tb + 127) // 255
                            a = (aq * ta + 127) // 255
                        else:
                            u = float(_F32((e0d * u0 + e1d * u1 + e2d * u2) / iwd))
                            v = float(_F32((e0d * v0 + e1d * v1 + e2d * v2) / iwd))
                            txi = _wrap_texel(u * tw_, tw_)
                            tyi = _wrap_texel(v * th_, th_)
                            texels += 1
                            r = (int(tex[tyi, txi, 0]) * rq + 127) // 255
                            g = (int(tex[tyi, txi, 1]) * gq + 127) // 255
                            b = (int(tex[tyi, txi, 2]) * bq + 127) // 255
                            a = (int(tex[tyi, txi, 3]) * aq + 127) // 255
                            r = (r * tr + 127) // 255
                            g = (g * tg + 127) // 255
                            b = (b * tb + 127) // 255
                            a = (a * ta + 127) // 255
                    depth[ty, tx] = _F32(zf)
                    color[ty, tx, 0] = r
                    color[ty, tx, 1] = g
                    color[ty, tx, 2] = b
                    color[ty, tx, 3] = a
                    frags += 1
            e0 += sx_step0
            e1 += sx_step1
            e2 += sx_step2
        e0_row += sy_step0
        e1_row += sy_step1
        e2_row += sy_step2
    return frags, texels


def raster_tri_memo(
    color,
    depth,
    tile_x0: int,
    tile_y0: int,
    px0: int,
    px1: int,
    py0: int,
    py1: int,
    ivals,
    fvals,
    shader: int,
    tr: int,
    tg: int,
    tb: int,
    ta: int,
    tex,
    has_tex: int,
    cache,
    prefix: bytes,
    prefix_reg: int,
    crc_tables,
):
    """raster_tri with a fragment memo cache consulted per depth-passing
    fragment.  ``prefix`` holds the draw-constant 13 bytes of the
    fragment key (shader, tint, texture id+version); ``prefix_reg`` is
    the CRC register already advanced over those bytes.  Returns
    (fragments_shaded, texels_fetched, memo_hits, memo_lookups)."""
    (a0, b0, c0, a1, b1, c1, a2, b2, c2, add0, add1, add2) = _edge_setup(ivals)
    z0 = float(fvals[0])
    z1 = float(fvals[1])
    z2 = float(fvals[2])
    iw0 = float(fvals[3])
    iw1 = float(fvals[4])
    iw2 = float(fvals[5])
    cr0 = float(fvals[6])
    cg0 = float(fvals[7])
    cb0 = float(fvals[8])
    ca0 = float(fvals[9])
    cr1 = float(fvals[10])
    cg1 = float(fvals[11])
    cb1 = float(fvals[12])
    ca1 = float(fvals[13])
    cr2 = float(fvals[14])
    cg2 = float(fvals[15])
    cb2 = float(fvals[16])
    ca2 = float(fvals[17])
    u0 = float(fvals[18])
    u1 = float(fvals[19])
    u2 = float(fvals[20])
    v0 = float(fvals[21])
    v1 = float(fvals[22])
    v2 = float(fvals[23])
    area2 = float(fvals[24])
    if has_tex:
        th_, tw_ = tex.shape[0], tex.shape[1]
    else:
        th_ = tw_ = 1

    t0_row = crc_tables.rows[0]
    lookup = cache.lookup
    store = cache.store

    sx_step0, sx_step1, sx_step2 = a0 * 256, a1 * 256, a2 * 256
    sy_step0, sy_step1, sy_step2 = b0 * 256, b1 * 256, b2 * 256
    px_c = px0 * 256 + 128
    py_c = py0 * 256 + 128
    e0_row = a0 * px_c + b0 * py_c + c0
    e1_row = a1 * px_c + b1 * py_c + c1
    e2_row = a2 * px_c + b2 * py_c + c2

    frags = 0
    texels = 0
    hits = 0
    lookups = 0
    for py in range(py0, py1 + 1):
        e0 = e0_row
        e1 = e1_row
        e2 = e2_row
        ty = py - tile_y0
        for px in range(px0, px1 + 1):
            if e0 >= add0 and e1 >= add1 and e2 >= add2:
                e0d = float(e0)
                e1d = float(e1)
                e2d = float(e2)
                z = (e0d * z0 + e1d * z1 + e2d * z2) / area2
                zf = float(_F32(z))
                tx = px - tile_x0
                if zf < float(depth[ty, tx]):
                    # Build the 12 varying bytes of the fragment key.
                    u = v = 0.0
                    if shader == 0:
                        rq = gq = bq = aq = 0
                        ub = vb = 0
                    else:
                        iwd = e0d * iw0 + e1d * iw1 + e2d * iw2
                        rq = _q8((e0d * cr0 + e1d * cr1 + e2d * cr2) / iwd)
                        gq = _q8((e0d * cg0 + e1d * cg1 + e2d * cg2) / iwd)
                        bq = _q8((e0d * cb0 + e1d * cb1 + e2d * cb2) / iwd)
                        aq = _q8((e0d * ca0 + e1d * ca1 + e2d * ca2) / iwd)
                        if shader == 2:
                            uf = _F32((e0d * u0 + e1d * u1 + e2d * u2) / iwd)
                            vf = _F32((e0d * v0 + e1d * v1 + e2d * v2) / iwd)
                            u = float(uf)
                            v = float(vf)
                            ub = int(uf.view(np.uint32))
                            vb = int(vf.view(np.uint32))
                        else:
                            ub = vb = 0
                    varying = bytes(
                        (
                            rq,
                            gq,
                            bq,
                            aq,
                            ub & 0xFF,
                            (ub >> 8) & 0xFF,
                            (ub >> 16) & 0xFF,
                            (ub >> 24) & 0xFF,
                            vb & 0xFF,
                            (vb >> 8) & 0xFF,
                            (vb >> 16) & 0xFF,
                            (vb >> 24) & 0xFF,
                        )
                    )
                    reg = prefix_reg
                    for byte in varying:
                        reg = (reg >> 8) ^ t0_row[(reg ^ byte) & 0xFF]
                    digest = reg ^ 0xFFFFFFFF
                    key = prefix + varying
                    lookups += 1
                    packed = lookup(digest, key)
                    if packed is not None:
                        hits += 1
                        r = (packed >> 24) & 0xFF
                        g = (packed >> 16) & 0xFF
                        b = (packed >> 8) & 0xFF
                        a = packed & 0xFF
                    else:
                        if shader == 0:
                            r = tr
                            g = tg
                            b = tb
                            a = ta
                        elif shader == 1:
                            r = (rq * tr + 127) // 255
                            g = (gq * tg + 127) // 255
                            b = (bq * tb + 127) // 255
                            a = (aq * ta + 127) // 255
                        else:
                            txi = _wrap_texel(u * tw_, tw_)
                            tyi = _wrap_texel(v * th_, th_)
                            texels += 1
                            r = (int(tex[tyi, txi, 0]) * rq + 127) // 255
                            g = (int(tex[tyi, txi, 1]) * gq + 127) // 255
                            b = (int(tex[tyi, txi, 2]) * bq + 127) // 255
                            a = (int(tex[tyi, txi, 3]) * aq + 127) // 255
                            r = (r * tr + 127) // 255
                            g = (g * tg + 127) // 255
                            b = (b * tb + 127) // 255
                            a = (a * ta + 127) // 255
                        frags += 1
                        store(digest, key, (r << 24) | (g << 16) | (b << 8) | a)
                    depth[ty, tx] = _F32(zf)
                    color[ty, tx, 0] = r
                    color[ty, tx, 1] = g
                    color[ty, tx, 2] = b
                    color[ty, tx, 3] = a
            e0 += sx_step0
            e1 += sx_step1
            e2 += sx_step2
        e0_row += sy_step0
        e1_row += sy_step1
        e2_row += sy_step2
    return frags, texels, hits, lookups
