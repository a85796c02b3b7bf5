"""Acceptance gate: eight release criteria, one test per criterion.

Each test prints a single ``[criterion N] PASS/FAIL`` verdict straight
to the terminal (bypassing capture) before asserting, so every run
shows the full scorecard.  The shared fixture renders the whole
5-kind x 5-technique matrix once, verified, at 256x256 with 16-pixel
tiles over 30 frames; several criteria read from it.
"""

from __future__ import annotations

import random
import shutil
import time
from types import SimpleNamespace

import numpy as np
import pytest

from tilesim.cli import main as cli_main
from tilesim.crc import (
    build_tables, crc32_bitwise, crc32_sliced, crc_concat, crc_splice,
)
from tilesim.redundancy import RunOptions, Technique, run_trace
from tilesim.scenes import SCENE_KINDS, generate_scene
from tilesim.stats import CostParams, estimate, totals
from tilesim.trace import serialize_expectations, serialize_trace

FRAMES = 30
SIDE = 256
TILE = 16
SEED = 7
CHECK_INPUT = b"123456789"
CHECK_VALUE = 0xCBF43926


def check(capsys, number: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, f"criterion {number}: {detail}"


@pytest.fixture(scope="session")
def suite():
    """Verified runs of every generator kind under every technique,
    with each technique's frames compared byte for byte against the
    render-everything baseline as they are produced."""
    scenes = {}
    runs = {}
    images_match = {}
    start = time.perf_counter()
    for kind in SCENE_KINDS:
        scene = generate_scene(kind, FRAMES, SEED, SIDE, SIDE, TILE)
        scenes[kind] = scene
        baseline = None
        for technique in Technique:
            options = RunOptions(
                technique=technique,
                verify=True,
                collect_images=True,
                expectations=(scene.expectations
                              if technique.uses_signatures else None),
            )
            result = run_trace(scene.trace, options)
            if technique is Technique.NONE:
                baseline = result.images
                images_match[kind, technique] = True
            else:
                images_match[kind, technique] = (
                    len(result.images) == len(baseline)
                    and all(a.dtype == b.dtype and np.array_equal(a, b)
                            for a, b in zip(result.images, baseline))
                )
            runs[kind, technique] = SimpleNamespace(
                frame_stats=result.frame_stats,
                skip_masks=result.skip_masks,
                verify_report=result.verify_report,
            )
    elapsed = time.perf_counter() - start
    return SimpleNamespace(scenes=scenes, runs=runs,
                           images_match=images_match, elapsed=elapsed)


def test_criterion_1_check_value_and_slicing_agreement(capsys):
    start = time.perf_counter()
    tables = {n: build_tables(n) for n in (1, 4, 8)}
    check_ok = crc32_bitwise(CHECK_INPUT) == CHECK_VALUE and all(
        crc32_sliced(CHECK_INPUT, t) == CHECK_VALUE for t in tables.values())
    rng = random.Random(0x51C3D)
    agreements = 0
    for _ in range(10_000):
        data = rng.randbytes(rng.randrange(0, 64))
        want = crc32_bitwise(data)
        if (crc32_sliced(data, tables[4]) == want
                and crc32_sliced(data, tables[8]) == want):
            agreements += 1
    elapsed = time.perf_counter() - start
    ok = check_ok and agreements == 10_000 and elapsed < 5.0
    check(capsys, 1, ok,
          f"0x{CHECK_VALUE:08X} in all layouts, {agreements}/10000 random "
          f"inputs agree across layouts, {elapsed:.2f}s")


def test_criterion_2_concat_and_splice_match_recompute(capsys):
    start = time.perf_counter()
    tables = build_tables(4)
    rng = random.Random(0xC0CA7)
    concats = 0
    for _ in range(1_000):
        a = rng.randbytes(rng.randrange(0, 96))
        b = rng.randbytes(rng.randrange(0, 96))
        combined = crc_concat(crc32_sliced(a, tables),
                              crc32_sliced(b, tables), len(b))
        if combined == crc32_sliced(a + b, tables):
            concats += 1
    splices = 0
    for _ in range(1_000):
        msg = bytearray(rng.randbytes(rng.randrange(16, 160)))
        width = rng.randrange(1, 12)
        offset = rng.randrange(0, len(msg) - width + 1)
        old = bytes(msg[offset:offset + width])
        new = rng.randbytes(width)
        before = crc32_sliced(bytes(msg), tables)
        msg[offset:offset + width] = new
        patched = crc_splice(before, old, new, len(msg) - offset - width)
        if patched == crc32_sliced(bytes(msg), tables):
            splices += 1
    elapsed = time.perf_counter() - start
    ok = concats == 1_000 and splices == 1_000 and elapsed < 5.0
    check(capsys, 2, ok,
          f"{concats}/1000 concatenations and {splices}/1000 splice edits "
          f"match full recompute, {elapsed:.2f}s")


def test_criterion_3_every_technique_preserves_output(capsys, suite):
    mismatched = sorted((kind, technique.value)
                        for (kind, technique), same in suite.images_match.items()
                        if not same)
    collisions = sorted(
        (kind, technique.value,
         len(suite.runs[kind, technique].verify_report.collisions))
        for kind in SCENE_KINDS for technique in Technique
        if suite.runs[kind, technique].verify_report.collisions)
    ok = not mismatched and not collisions and suite.elapsed < 60.0
    detail = (f"{len(SCENE_KINDS)} kinds x 4 techniques byte-identical to "
              f"baseline, 0 collisions, matrix ran in {suite.elapsed:.1f}s")
    if mismatched or collisions:
        detail = f"mismatched={mismatched} collisions={collisions}"
    check(capsys, 3, ok, detail)


def test_criterion_4_skip_masks_equal_expectation_sidecar(capsys, suite):
    compared = 0
    wrong = []
    for kind in ("moving_quad", "scroll"):
        expectations = suite.scenes[kind].expectations
        masks = suite.runs[kind, Technique.RE].skip_masks
        for frame_idx in range(1, FRAMES):
            declared = set(expectations[frame_idx])
            skipped = {i for i, flag in enumerate(masks[frame_idx]) if flag}
            compared += 1
            if skipped != declared:
                wrong.append((kind, frame_idx + 1))
    ok = compared == 2 * (FRAMES - 1) and not wrong
    detail = (f"{compared} frame masks equal the sidecar exactly"
              if not wrong else f"wrong frames: {wrong}")
    check(capsys, 4, ok, detail)


def test_criterion_5_skipped_tiles_match_previous_frame(capsys, suite):
    failures = sorted(
        (kind, technique.value,
         len(suite.runs[kind, technique].verify_report.containment_failures))
        for kind in SCENE_KINDS for technique in Technique
        if suite.runs[kind, technique].verify_report.containment_failures)
    ok = not failures
    detail = ("every skipped tile shadow-renders to the previous frame's "
              "bytes across the full matrix"
              if ok else f"containment failures: {failures}")
    check(capsys, 5, ok, detail)


def test_criterion_6_modeled_cost_ordering_on_static(capsys, suite):
    params = CostParams()
    stats = {t: suite.runs["static", t].frame_stats for t in Technique}
    # Frame 1 renders everything under every technique; the steady
    # state the ordering describes starts at frame 2.
    tails = {t: totals(stats[t][1:]) for t in Technique}
    cycles = {t: estimate(tails[t], params)[0] for t in Technique}
    re_fragments = tails[Technique.RE].fragments_shaded
    write_ratio = (tails[Technique.TE].bytes_written
                   / tails[Technique.NONE].bytes_written)
    te_vs_none = (abs(cycles[Technique.TE] - cycles[Technique.NONE])
                  / cycles[Technique.NONE])
    whole_none = estimate(totals(stats[Technique.NONE]), params)[0]
    whole_re = estimate(totals(stats[Technique.RE]), params)[0]
    speedup = whole_none / whole_re
    ok = (re_fragments == 0
          and write_ratio < 0.01
          and cycles[Technique.RE] < cycles[Technique.MEMO]
          and cycles[Technique.MEMO] <= cycles[Technique.TE]
          and te_vs_none < 0.05
          and speedup >= 3.0)
    check(capsys, 6, ok,
          f"steady-state fragments(re)={re_fragments}, "
          f"write ratio te/none={write_ratio:.4f}, cycles re "
          f"{cycles[Technique.RE]:.0f} < memo {cycles[Technique.MEMO]:.0f} "
          f"<= te {cycles[Technique.TE]:.0f} (vs none within "
          f"{te_vs_none:.3f}), whole-run speedup {speedup:.1f}x")


def test_criterion_7_thread_count_never_changes_output(capsys, suite, tmp_path):
    mismatched = []
    for kind in SCENE_KINDS:
        trace_path = tmp_path / f"{kind}.trace"
        trace_path.write_text(serialize_trace(suite.scenes[kind].trace))
        (tmp_path / f"{kind}.trace.expect").write_text(
            serialize_expectations(suite.scenes[kind].expectations))
        for technique in Technique:
            outputs = []
            for threads in ("1", "8"):
                frames_dir = tmp_path / f"frames_{threads}"
                stats_path = tmp_path / f"stats_{threads}.csv"
                code = cli_main([
                    "--trace", str(trace_path),
                    "--technique", technique.value,
                    "--threads", threads,
                    "--dump-frames", str(frames_dir),
                    "--stats", str(stats_path),
                ])
                assert code == 0
                ppms = {path.name: path.read_bytes()
                        for path in frames_dir.iterdir()}
                outputs.append((stats_path.read_text(), ppms))
                shutil.rmtree(frames_dir)
                stats_path.unlink()
            if outputs[0] != outputs[1]:
                mismatched.append((kind, technique.value))
    ok = not mismatched
    detail = (f"{len(SCENE_KINDS) * len(Technique)} runs byte-identical "
              "between 1 and 8 threads (PPMs and CSVs)"
              if ok else f"thread-dependent output: {mismatched}")
    check(capsys, 7, ok, detail)


def test_criterion_8_large_scene_completes_quickly(capsys):
    start = time.perf_counter()
    scene = generate_scene("moving_quad", FRAMES, SEED, 512, 512, TILE)
    result = run_trace(scene.trace, RunOptions(technique=Technique.RE))
    elapsed = time.perf_counter() - start
    ok = elapsed < 10.0 and len(result.frame_stats) == FRAMES
    check(capsys, 8, ok,
          f"512x512 moving_quad, 30 frames with input-signature skipping "
          f"in {elapsed:.2f}s")
