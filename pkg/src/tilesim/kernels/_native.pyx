# cython: language_level=3, boundscheck=False, wraparound=False
# cython: cdivision=True, initializedcheck=False
"""Compiled kernel backend.

Mirrors ``_python.py`` expression for expression; both must produce
bit-identical results.  The build disables FP contraction so the
float64 arithmetic here rounds exactly like the interpreter's.
"""

from libc.math cimport floor, fmod


def crc_update(reg, data, tables):
    """Advance a raw CRC register over ``data`` (no init/xorout applied)."""
    cdef const unsigned int[:, ::1] tab = tables.array
    cdef const unsigned char[::1] buf = data
    cdef unsigned int r = reg
    cdef Py_ssize_t n = tables.slice_count
    cdef Py_ssize_t length = buf.shape[0]
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t main
    cdef unsigned int w
    if n == 1:
        while i < length:
            r = (r >> 8) ^ tab[0, (r ^ buf[i]) & 0xFF]
            i += 1
        return r
    main = length - (length % n)
    if n == 4:
        while i < main:
            w = r ^ (
                buf[i]
                | (<unsigned int>buf[i + 1] << 8)
                | (<unsigned int>buf[i + 2] << 16)
                | (<unsigned int>buf[i + 3] << 24)
            )
            r = (
                tab[3, w & 0xFF]
                ^ tab[2, (w >> 8) & 0xFF]
                ^ tab[1, (w >> 16) & 0xFF]
                ^ tab[0, (w >> 24) & 0xFF]
            )
            i += 4
    else:
        while i < main:
            w = r ^ (
                buf[i]
                | (<unsigned int>buf[i + 1] << 8)
                | (<unsigned int>buf[i + 2] << 16)
                | (<unsigned int>buf[i + 3] << 24)
            )
            r = (
                tab[7, w & 0xFF]
                ^ tab[6, (w >> 8) & 0xFF]
                ^ tab[5, (w >> 16) & 0xFF]
                ^ tab[4, (w >> 24) & 0xFF]
                ^ tab[3, buf[i + 4]]
                ^ tab[2, buf[i + 5]]
                ^ tab[1, buf[i + 6]]
                ^ tab[0, buf[i + 7]]
            )
            i += 8
    while i < length:
        r = (r >> 8) ^ tab[0, (r ^ buf[i]) & 0xFF]
        i += 1
    return r


cdef inline long long _q8(double value) nogil:
    cdef long long q = <long long>floor(value + 0.5)
    if q < 0:
        return 0
    if q > 255:
        return 255
    return q


cdef inline long long _wrap_texel(double value, long long size) nogil:
    cdef double r = fmod(value, size)
    if r < 0.0:
        r += size
    return (<long long>floor(r)) % size


def raster_tri(
    unsigned char[:, :, ::1] color,
    float[:, ::1] depth,
    long long tile_x0,
    long long tile_y0,
    long long px0,
    long long px1,
    long long py0,
    long long py1,
    const long long[::1] ivals,
    const double[::1] fvals,
    int shader,
    long long tr,
    long long tg,
    long long tb,
    long long ta,
    const unsigned char[:, :, ::1] tex,
    int has_tex,
):
    """Rasterize one triangle over the inclusive pixel box [px0..px1] x
    [py0..py1] into tile-local color/depth buffers.  Returns
    (fragments_shaded, texels_fetched)."""
    cdef long long sx0 = ivals[0]
    cdef long long sy0 = ivals[1]
    cdef long long sx1 = ivals[2]
    cdef long long sy1 = ivals[3]
    cdef long long sx2 = ivals[4]
    cdef long long sy2 = ivals[5]
    cdef long long s = ivals[6]
    cdef long long a0 = s * (sy1 - sy2)
    cdef long long b0 = s * (sx2 - sx1)
    cdef long long c0 = -(a0 * sx1 + b0 * sy1)
    cdef long long a1 = s * (sy2 - sy0)
    cdef long long b1 = s * (sx0 - sx2)
    cdef long long c1 = -(a1 * sx2 + b1 * sy2)
    cdef long long a2 = s * (sy0 - sy1)
    cdef long long b2 = s * (sx1 - sx0)
    cdef long long c2 = -(a2 * sx0 + b2 * sy0)
    cdef long long dx, dy
    cdef long long add0, add1, add2
    dx = s * (sx2 - sx1)
    dy = s * (sy2 - sy1)
    add0 = 0 if ((dy == 0 and dx > 0) or dy < 0) else 1
    dx = s * (sx0 - sx2)
    dy = s * (sy0 - sy2)
    add1 = 0 if ((dy == 0 and dx > 0) or dy < 0) else 1
    dx = s * (sx1 - sx0)
    dy = s * (sy1 - sy0)
    add2 = 0 if ((dy == 0 and dx > 0) or dy < 0) else 1

    cdef double z0 = fvals[0]
    cdef double z1 = fvals[1]
    cdef double z2 = fvals[2]
    cdef double iw0 = fvals[3]
    cdef double iw1 = fvals[4]
    cdef double iw2 = fvals[5]
    cdef double cr0 = fvals[6]
    cdef double cg0 = fvals[7]
    cdef double cb0 = fvals[8]
    cdef double ca0 = fvals[9]
    cdef double cr1 = fvals[10]
    cdef double cg1 = fvals[11]
    cdef double cb1 = fvals[12]
    cdef double ca1 = fvals[13]
    cdef double cr2 = fvals[14]
    cdef double cg2 = fvals[15]
    cdef double cb2 = fvals[16]
    cdef double ca2 = fvals[17]
    cdef double u0 = fvals[18]
    cdef double u1 = fvals[19]
    cdef double u2 = fvals[20]
    cdef double v0 = fvals[21]
    cdef double v1 = fvals[22]
    cdef double v2 = fvals[23]
    cdef double area2 = fvals[24]
    cdef long long th_, tw_
    if has_tex:
        th_ = tex.shape[0]
        tw_ = tex.shape[1]
    else:
        th_ = tw_ = 1

    cdef long long sx_step0 = a0 * 256
    cdef long long sx_step1 = a1 * 256
    cdef long long sx_step2 = a2 * 256
    cdef long long sy_step0 = b0 * 256
    cdef long long sy_step1 = b1 * 256
    cdef long long sy_step2 = b2 * 256
    cdef long long px_c = px0 * 256 + 128
    cdef long long py_c = py0 * 256 + 128
    cdef long long e0_row = a0 * px_c + b0 * py_c + c0
    cdef long long e1_row = a1 * px_c + b1 * py_c + c1
    cdef long long e2_row = a2 * px_c + b2 * py_c + c2

    cdef long long frags = 0
    cdef long long texels = 0
    cdef long long px, py, tx, ty, e0, e1, e2
    cdef long long r, g, b, a, rq, gq, bq, aq, txi, tyi
    cdef double e0d, e1d, e2d, z, zf, iwd, u, v
    for py in range(py0, py1 + 1):
        e0 = e0_row
        e1 = e1_row
        e2 = e2_row
        ty = py - tile_y0
        for px in range(px0, px1 + 1):
            if e0 >= add0 and e1 >= add1 and e2 >= add2:
                e0d = <double>e0
                e1d = <double>e1
                e2d = <double>e2
                z = (e0d * z0 + e1d * z1 + e2d * z2) / area2
                zf = <double><float>z
                tx = px - tile_x0
                if zf < <double>depth[ty, tx]:
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
                            u = <double><float>((e0d * u0 + e1d * u1 + e2d * u2) / iwd)
                            v = <double><float>((e0d * v0 + e1d * v1 + e2d * v2) / iwd)
                            txi = _wrap_texel(u * tw_, tw_)
                            tyi = _wrap_texel(v * th_, th_)
                            texels += 1
                            r = (<long long>tex[tyi, txi, 0] * rq + 127) // 255
                            g = (<long long>tex[tyi, txi, 1] * gq + 127) // 255
                            b = (<long long>tex[tyi, txi, 2] * bq + 127) // 255
                            a = (<long long>tex[tyi, txi, 3] * aq + 127) // 255
                            r = (r * tr + 127) // 255
                            g = (g * tg + 127) // 255
                            b = (b * tb + 127) // 255
                            a = (a * ta + 127) // 255
                    depth[ty, tx] = <float>zf
                    color[ty, tx, 0] = <unsigned char>r
                    color[ty, tx, 1] = <unsigned char>g
                    color[ty, tx, 2] = <unsigned char>b
                    color[ty, tx, 3] = <unsigned char>a
                    frags += 1
            e0 += sx_step0
            e1 += sx_step1
            e2 += sx_step2
        e0_row += sy_step0
        e1_row += sy_step1
        e2_row += sy_step2
    return frags, texels


def raster_tri_memo(
    unsigned char[:, :, ::1] color,
    float[:, ::1] depth,
    long long tile_x0,
    long long tile_y0,
    long long px0,
    long long px1,
    long long py0,
    long long py1,
    const long long[::1] ivals,
    const double[::1] fvals,
    int shader,
    long long tr,
    long long tg,
    long long tb,
    long long ta,
    const unsigned char[:, :, ::1] tex,
    int has_tex,
    cache,
    bytes prefix,
    prefix_reg,
    crc_tables,
):
    """raster_tri with a fragment memo cache consulted per depth-passing
    fragment.  Returns (fragments_shaded, texels_fetched, memo_hits,
    memo_lookups)."""
    cdef long long sx0 = ivals[0]
    cdef long long sy0 = ivals[1]
    cdef long long sx1 = ivals[2]
    cdef long long sy1 = ivals[3]
    cdef long long sx2 = ivals[4]
    cdef long long sy2 = ivals[5]
    cdef long long s = ivals[6]
    cdef long long a0 = s * (sy1 - sy2)
    cdef long long b0 = s * (sx2 - sx1)
    cdef long long c0 = -(a0 * sx1 + b0 * sy1)
    cdef long long a1 = s * (sy2 - sy0)
    cdef long long b1 = s * (sx0 - sx2)
    cdef long long c1 = -(a1 * sx2 + b1 * sy2)
    cdef long long a2 = s * (sy0 - sy1)
    cdef long long b2 = s * (sx1 - sx0)
    cdef long long c2 = -(a2 * sx0 + b2 * sy0)
    cdef long long dx, dy
    cdef long long add0, add1, add2
    dx = s * (sx2 - sx1)
    dy = s * (sy2 - sy1)
    add0 = 0 if ((dy == 0 and dx > 0) or dy < 0) else 1
    dx = s * (sx0 - sx2)
    dy = s * (sy0 - sy2)
    add1 = 0 if ((dy == 0 and dx > 0) or dy < 0) else 1
    dx = s * (sx1 - sx0)
    dy = s * (sy1 - sy0)
    add2 = 0 if ((dy == 0 and dx > 0) or dy < 0) else 1

    cdef double z0 = fvals[0]
    cdef double z1 = fvals[1]
    cdef double z2 = fvals[2]
    cdef double iw0 = fvals[3]
    cdef double iw1 = fvals[4]
    cdef double iw2 = fvals[5]
    cdef double cr0 = fvals[6]
    cdef double cg0 = fvals[7]
    cdef double cb0 = fvals[8]
    cdef double ca0 = fvals[9]
    cdef double cr1 = fvals[10]
    cdef double cg1 = fvals[11]
    cdef double cb1 = fvals[12]
    cdef double ca1 = fvals[13]
    cdef double cr2 = fvals[14]
    cdef double cg2 = fvals[15]
    cdef double cb2 = fvals[16]
    cdef double ca2 = fvals[17]
    cdef double u0 = fvals[18]
    cdef double u1 = fvals[19]
    cdef double u2 = fvals[20]
    cdef double v0 = fvals[21]
    cdef double v1 = fvals[22]
    cdef double v2 = fvals[23]
    cdef double area2 = fvals[24]
    cdef long long th_, tw_
    if has_tex:
        th_ = tex.shape[0]
        tw_ = tex.shape[1]
    else:
        th_ = tw_ = 1

    cdef const unsigned int[:, ::1] tab = crc_tables.array
    cdef unsigned int preg = prefix_reg
    lookup = cache.lookup
    store = cache.store

    cdef long long sx_step0 = a0 * 256
    cdef long long sx_step1 = a1 * 256
    cdef long long sx_step2 = a2 * 256
    cdef long long sy_step0 = b0 * 256
    cdef long long sy_step1 = b1 * 256
    cdef long long sy_step2 = b2 * 256
    cdef long long px_c = px0 * 256 + 128
    cdef long long py_c = py0 * 256 + 128
    cdef long long e0_row = a0 * px_c + b0 * py_c + c0
    cdef long long e1_row = a1 * px_c + b1 * py_c + c1
    cdef long long e2_row = a2 * px_c + b2 * py_c + c2

    cdef long long frags = 0
    cdef long long texels = 0
    cdef long long hits = 0
    cdef long long lookups = 0
    cdef long long px, py, tx, ty, e0, e1, e2
    cdef long long r, g, b, a, rq, gq, bq, aq, txi, tyi
    cdef double e0d, e1d, e2d, z, zf, iwd, u, v
    cdef float uf, vf
    cdef unsigned int ub, vb, reg, digest
    cdef unsigned char varying[12]
    cdef Py_ssize_t vi
    cdef unsigned long long packed_c
    for py in range(py0, py1 + 1):
        e0 = e0_row
        e1 = e1_row
        e2 = e2_row
        ty = py - tile_y0
        for px in range(px0, px1 + 1):
            if e0 >= add0 and e1 >= add1 and e2 >= add2:
                e0d = <double>e0
                e1d = <double>e1
                e2d = <double>e2
                z = (e0d * z0 + e1d * z1 + e2d * z2) / area2
                zf = <double><float>z
                tx = px - tile_x0
                if zf < <double>depth[ty, tx]:
                    u = 0.0
                    v = 0.0
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
                            uf = <float>((e0d * u0 + e1d * u1 + e2d * u2) / iwd)
                            vf = <float>((e0d * v0 + e1d * v1 + e2d * v2) / iwd)
                            u = <double>uf
                            v = <double>vf
                            ub = (<unsigned int *>&uf)[0]
                            vb = (<unsigned int *>&vf)[0]
                        else:
                            ub = vb = 0
                    varying[0] = <unsigned char>rq
                    varying[1] = <unsigned char>gq
                    varying[2] = <unsigned char>bq
                    varying[3] = <unsigned char>aq
                    varying[4] = <unsigned char>(ub & 0xFF)
                    varying[5] = <unsigned char>((ub >> 8) & 0xFF)
                    varying[6] = <unsigned char>((ub >> 16) & 0xFF)
                    varying[7] = <unsigned char>((ub >> 24) & 0xFF)
                    varying[8] = <unsigned char>(vb & 0xFF)
                    varying[9] = <unsigned char>((vb >> 8) & 0xFF)
                    varying[10] = <unsigned char>((vb >> 16) & 0xFF)
                    varying[11] = <unsigned char>((vb >> 24) & 0xFF)
                    reg = preg
                    for vi in range(12):
                        reg = (reg >> 8) ^ tab[0, (reg ^ varying[vi]) & 0xFF]
                    digest = reg ^ 0xFFFFFFFF
                    key = prefix + varying[:12]
                    lookups += 1
                    packed = lookup(digest, key)
                    if packed is not None:
                        hits += 1
                        packed_c = packed
                        r = (packed_c >> 24) & 0xFF
                        g = (packed_c >> 16) & 0xFF
                        b = (packed_c >> 8) & 0xFF
                        a = packed_c & 0xFF
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
                            r = (<long long>tex[tyi, txi, 0] * rq + 127) // 255
                            g = (<long long>tex[tyi, txi, 1] * gq + 127) // 255
                            b = (<long long>tex[tyi, txi, 2] * bq + 127) // 255
                            a = (<long long>tex[tyi, txi, 3] * aq + 127) // 255
                            r = (r * tr + 127) // 255
                            g = (g * tg + 127) // 255
                            b = (b * tb + 127) // 255
                            a = (a * ta + 127) // 255
                        frags += 1
                        store(digest, key, (r << 24) | (g << 16) | (b << 8) | a)
                    depth[ty, tx] = <float>zf
                    color[ty, tx, 0] = <unsigned char>r
                    color[ty, tx, 1] = <unsigned char>g
                    color[ty, tx, 2] = <unsigned char>b
                    color[ty, tx, 3] = <unsigned char>a
            e0 += sx_step0
            e1 += sx_step1
            e2 += sx_step2
        e0_row += sy_step0
        e1_row += sy_step1
        e2_row += sy_step2
    return frags, texels, hits, lookups
