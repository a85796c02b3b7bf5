"""Technique orchestration: output preservation, skip decisions,
suppression accounting, the memo cache, fault injection, and threading.
"""

from __future__ import annotations

import numpy as np
import pytest

from tilesim.errors import ConfigError, TraceDataError
from tilesim.redundancy import (
    MEMO_KEY_SIZE,
    TEXEL_BYTES,
    WRITEBACK_BYTES_PER_PIXEL,
    MemoCache,
    RunOptions,
    RunResult,
    Technique,
    VerifyReport,
    run_trace,
)
from tilesim.scenes import generate_scene
from tilesim.signature import RECORD_SIZE
from tilesim.trace import DrawCommand, FrameTrace, Shader, Vertex, parse_trace

SIZE = 128
ALL_TECHNIQUES = [Technique.NONE, Technique.RE, Technique.TE, Technique.MEMO, Technique.RE_TE]


@pytest.fixture(scope="module")
def quad_scene():
    return generate_scene("moving_quad", frames=4, seed=8, width=SIZE, height=SIZE)


@pytest.fixture(scope="module")
def static_scene():
    return generate_scene("static", frames=4, seed=8, width=SIZE, height=SIZE)


@pytest.fixture(scope="module")
def baseline(quad_scene):
    return run_trace(quad_scene.trace, RunOptions(technique=Technique.NONE,
                                                  collect_images=True))


def test_technique_enum_flags():
    assert Technique("re+te").uses_signatures
    assert Technique("re+te").uses_output_crc
    assert Technique.RE.uses_signatures and not Technique.RE.uses_output_crc
    assert Technique.TE.uses_output_crc and not Technique.TE.uses_signatures
    assert not Technique.NONE.uses_signatures


@pytest.mark.parametrize("technique", ALL_TECHNIQUES[1:], ids=lambda t: t.value)
def test_every_technique_preserves_output(technique, quad_scene, baseline):
    opts = RunOptions(technique=technique, verify=True, collect_images=True,
                      expectations=quad_scene.expectations
                      if technique.uses_signatures else None)
    result = run_trace(quad_scene.trace, opts)
    assert result.verify_report.ok, result.verify_report.summary()
    for frame_no, (a, b) in enumerate(zip(baseline.images, result.images), start=1):
        assert np.array_equal(a, b), f"{technique.value} frame {frame_no}"
    assert np.array_equal(baseline.framebuffer.color, result.framebuffer.color)


def test_re_skip_masks_match_ground_truth(quad_scene):
    result = run_trace(quad_scene.trace, RunOptions(technique=Technique.RE))
    masks = [
        frozenset(i for i, skipped in enumerate(mask) if skipped)
        for mask in result.skip_masks
    ]
    assert masks == list(quad_scene.expectations)


def test_none_technique_never_skips(quad_scene, baseline):
    tiles = quad_scene.trace.tile_count
    for st, mask in zip(baseline.frame_stats, baseline.skip_masks):
        assert st.tiles_total == tiles
        assert st.tiles_skipped == 0
        assert not any(mask)
    assert baseline.fully_skipped_frames == 0


def test_accounting_identities(quad_scene, baseline):
    trace = quad_scene.trace
    per_frame_vertices = [sum(len(d.vertices) for d in frame) for frame in trace.frames]
    for st, expect_verts in zip(baseline.frame_stats, per_frame_vertices):
        assert st.vertices_transformed == expect_verts
        assert st.bytes_read == TEXEL_BYTES * st.texels_fetched
        assert st.bytes_written == SIZE * SIZE * WRITEBACK_BYTES_PER_PIXEL
        assert st.crc_bytes_hashed == 0
        assert st.memo_lookups == st.memo_hits == 0


def test_re_accounting_and_full_skips(static_scene):
    result = run_trace(static_scene.trace, RunOptions(technique=Technique.RE))
    tiles = static_scene.trace.tile_count
    first, later = result.frame_stats[0], result.frame_stats[1:]
    assert first.crc_bytes_hashed == RECORD_SIZE * first.triangles_binned
    assert first.tiles_skipped == 0
    for st in later:
        assert st.tiles_skipped == tiles
        assert st.fragments_shaded == 0
        assert st.texels_fetched == 0
        assert st.bytes_written == 0
        # Signatures are still computed for every binned triangle.
        assert st.crc_bytes_hashed == RECORD_SIZE * st.triangles_binned > 0
    assert result.fully_skipped_frames == len(later)


def test_te_suppresses_writeback_but_still_renders(static_scene):
    none_run = run_trace(static_scene.trace, RunOptions(technique=Technique.NONE))
    te_run = run_trace(static_scene.trace, RunOptions(technique=Technique.TE))
    for frame_no, (n, t) in enumerate(zip(none_run.frame_stats, te_run.frame_stats), 1):
        assert t.fragments_shaded == n.fragments_shaded  # no raster savings
        assert t.crc_bytes_hashed == SIZE * SIZE * 4     # color block per tile
        if frame_no == 1:
            assert t.bytes_written == n.bytes_written
        else:
            assert t.bytes_written == 0
        assert t.tiles_skipped == 0  # suppression is not skipping
    # TE leaves no trace in the skip masks but the technique still
    # reports zero fully skipped frames (rendering happened).
    assert te_run.fully_skipped_frames == 0


def test_memo_accounting_and_hits(static_scene):
    result = run_trace(static_scene.trace, RunOptions(technique=Technique.MEMO))
    none_run = run_trace(static_scene.trace, RunOptions(technique=Technique.NONE))
    for st, base in zip(result.frame_stats, none_run.frame_stats):
        assert st.memo_lookups == base.fragments_shaded
        assert st.fragments_shaded + st.memo_hits == st.memo_lookups
        assert st.crc_bytes_hashed == MEMO_KEY_SIZE * st.memo_lookups
        assert st.texels_fetched <= base.texels_fetched
    # Frame 2 re-shades nothing: every fragment input recurs.
    assert result.frame_stats[1].fragments_shaded == 0
    assert result.frame_stats[1].memo_hits == result.frame_stats[1].memo_lookups


def test_memo_capacity_thrash(static_scene):
    small = run_trace(static_scene.trace,
                      RunOptions(technique=Technique.MEMO, memo_capacity=16))
    big = run_trace(static_scene.trace,
                    RunOptions(technique=Technique.MEMO))
    assert small.frame_stats[1].memo_hits < big.frame_stats[1].memo_hits
    assert np.array_equal(small.framebuffer.color, big.framebuffer.color)


def test_memo_cache_tag_verification():
    cache = MemoCache(8)
    cache.store(0x1234, b"key-a", 0xAABBCCDD)
    assert cache.lookup(0x1234, b"key-a") == 0xAABBCCDD
    assert cache.lookup(0x1234, b"key-b") is None  # digest collision
    assert cache.lookup(0x9999, b"key-a") is None
    cache.store(0x1234, b"key-b", 0x11223344)  # collision overwrites
    assert cache.lookup(0x1234, b"key-a") is None
    assert cache.lookup(0x1234, b"key-b") == 0x11223344


def test_memo_cache_lru_order():
    cache = MemoCache(2)
    cache.store(1, b"a", 10)
    cache.store(2, b"b", 20)
    assert cache.lookup(1, b"a") == 10  # refresh 1
    cache.store(3, b"c", 30)           # evicts 2
    assert cache.lookup(2, b"b") is None
    assert cache.lookup(1, b"a") == 10
    assert cache.lookup(3, b"c") == 30
    assert len(cache) == 2
    with pytest.raises(ConfigError):
        MemoCache(0)


def test_forced_wrong_skip_is_caught_by_verify(quad_scene):
    def lie(frame_no, sig, mask):
        if frame_no >= 2:
            return [True] * len(mask)  # claim everything is redundant
        return mask

    result = run_trace(quad_scene.trace, RunOptions(
        technique=Technique.RE, verify=True, signature_hook=lie,
    ))
    report = result.verify_report
    assert not report.ok
    assert report.collisions, "wrong skips must surface as collisions"
    assert all(kind == "input-signature" for (_, _, kind) in report.collisions)
    assert not report.expectation_failures  # suppressed while a hook lies


def test_expectation_mismatch_is_reported(quad_scene):
    wrong = [frozenset()] * len(quad_scene.trace.frames)
    result = run_trace(quad_scene.trace, RunOptions(
        technique=Technique.RE, verify=True, expectations=wrong,
    ))
    report = result.verify_report
    assert report.collisions == [] and report.containment_failures == []
    assert report.expectation_failures
    assert not report.ok


def test_expectation_length_mismatch_rejected(quad_scene):
    with pytest.raises(ConfigError, match="expectations cover"):
        run_trace(quad_scene.trace, RunOptions(
            technique=Technique.RE, verify=True,
            expectations=[frozenset()],
        ))


@pytest.mark.parametrize("technique", [Technique.NONE, Technique.RE, Technique.RE_TE],
                         ids=lambda t: t.value)
def test_threads_do_not_change_results(technique, quad_scene):
    runs = [
        run_trace(quad_scene.trace, RunOptions(
            technique=technique, threads=threads, collect_images=True,
        ))
        for threads in (1, 4)
    ]
    for a, b in zip(runs[0].images, runs[1].images):
        assert np.array_equal(a, b)
    assert runs[0].frame_stats == runs[1].frame_stats
    assert runs[0].skip_masks == runs[1].skip_masks


def test_thread_count_validated(quad_scene):
    with pytest.raises(ConfigError):
        run_trace(quad_scene.trace, RunOptions(threads=0))


def test_unknown_texture_id_rejected():
    text = (
        "trace 64 64 16\n"
        "texture 1 4 4 pattern checker\n"
        "frame\n"
        "draw textured matrix 1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 1 tint ffffffff tex 1\n"
        "v -0.5 -0.5 0.5 0 0 0 255 0 0\n"
        "v 0.5 -0.5 0.5 0 0 0 255 1 0\n"
        "v 0.0 0.5 0.5 0 0 0 255 0 1\n"
    )
    trace = parse_trace(text)
    trace.frames[0][0].texture_id = 2  # bypass parser validation
    with pytest.raises(TraceDataError, match="texture"):
        run_trace(trace, RunOptions())


def test_signature_rows_collection(static_scene):
    result = run_trace(static_scene.trace, RunOptions(
        technique=Technique.RE, collect_signatures=True,
    ))
    rows = result.signature_rows
    frames = len(static_scene.trace.frames)
    assert len(rows) == frames * static_scene.trace.tile_count
    frame_no, tx, ty, signature, length, skipped = rows[0]
    assert frame_no == 1 and (tx, ty) == (0, 0)
    assert 0 <= signature < (1 << 32)
    assert length % RECORD_SIZE == 0
    assert skipped in (0, 1)
    # Static content: every tile's signature repeats across frames.
    first = {(r[1], r[2]): (r[3], r[4]) for r in rows if r[0] == 1}
    last = {(r[1], r[2]): (r[3], r[4]) for r in rows if r[0] == frames}
    assert first == last


def test_fully_skipped_requires_signature_technique(static_scene):
    memo = run_trace(static_scene.trace, RunOptions(technique=Technique.MEMO))
    assert memo.fully_skipped_frames == 0
