"""Compare the compiled and pure-Python kernel backends.

Times CRC hashing throughput and full pipeline runs per backend, checks
that both produce identical output along the way, and prints a small
table.  Run as ``python3 benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import argparse
import os
import time

import numpy as np

import tilesim.kernels as kernels
from tilesim.crc import build_tables, crc32_sliced
from tilesim.redundancy import RunOptions, Technique, run_trace
from tilesim.scenes import generate_scene


def time_crc(backend: str, payload: bytes, slices: int, repeats: int) -> float:
    kernels.use(backend)
    tables = build_tables(slices)
    crc32_sliced(payload, tables)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        crc32_sliced(payload, tables)
        best = min(best, time.perf_counter() - t0)
    return len(payload) / best / 1e6


def time_pipeline(backend: str, kind: str, frames: int, technique: Technique) -> tuple[float, np.ndarray]:
    kernels.use(backend)
    scene = generate_scene(kind, frames=frames, seed=1)
    t0 = time.perf_counter()
    result = run_trace(scene.trace, RunOptions(technique=technique))
    return time.perf_counter() - t0, result.framebuffer.color.copy()


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=12)
    parser.add_argument("--crc-mib", type=int, default=8)
    args = parser.parse_args()

    backends = kernels.available()
    if "native" not in backends:
        print("note: compiled backend unavailable, timing python only")

    payload = os.urandom(args.crc_mib << 20)
    print(f"CRC throughput over {args.crc_mib} MiB (MB/s, best of 3):")
    for slices in (1, 4, 8):
        row = [f"  slice-by-{slices}:"]
        for backend in backends:
            rate = time_crc(backend, payload, slices, repeats=3)
            row.append(f"{backend} {rate:9.1f}")
        print("  ".join(row))

    print(f"\nPipeline wall time, {args.frames} frames at 256x256 (s):")
    for kind, technique in (
        ("static", Technique.NONE),
        ("moving_quad", Technique.RE),
        ("scroll", Technique.RE_TE),
        ("camera_pan", Technique.MEMO),
    ):
        row = [f"  {kind:<12} {technique.value:<5}"]
        images = []
        for backend in backends:
            elapsed, image = time_pipeline(backend, kind, args.frames, technique)
            row.append(f"{backend} {elapsed:7.3f}")
            images.append(image)
        if len(images) == 2 and not np.array_equal(images[0], images[1]):
            raise SystemExit(f"backend outputs differ on {kind}/{technique.value}")
        print("  ".join(row))

    if len(backends) == 2:
        print("\nbackend outputs verified identical on all pipeline runs")
    kernels.use(backends[0])
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
