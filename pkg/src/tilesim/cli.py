"""Command-line front end.

Exit codes: 0 on success, 1 for bad input or configuration, 2 when
verify mode found a correctness failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import kernels
from .crc import SUPPORTED_SLICE_COUNTS, build_tables
from .errors import ConfigError, TraceDataError, TraceParseError
from .raster import write_ppm
from .redundancy import DEFAULT_MEMO_CAPACITY, RunOptions, Technique, run_trace
from .scenes import SCENE_KINDS, generate_scene
from .stats import CostParams, compare_report, estimate, render_csv, totals
from .trace import (
    parse_expectations, parse_trace, serialize_expectations, serialize_trace,
)

_CRC_CHOICES = {"bitwise": 1, "sliced4": 4, "sliced8": 8}


class _Parser(argparse.ArgumentParser):
    # Reserve exit code 2 for verification failures; argument errors
    # exit 1 like every other input problem.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="tilesim",
        description="Tile pipeline simulator with input-signature, "
                    "output-hash, and fragment-memo redundancy elimination.",
    )
    src = p.add_mutually_exclusive_group()
    src.add_argument("--trace", metavar="FILE", help="trace file to run")
    src.add_argument(
        "--gen", metavar="SPEC",
        help="generate a scene: kind:frames[:seed=N][:size=WxH]; kinds: "
             + ", ".join(SCENE_KINDS),
    )
    p.add_argument(
        "--technique", choices=[t.value for t in Technique], default="none",
        help="redundancy elimination technique (default: none)",
    )
    p.add_argument(
        "--tile-size", type=int, default=None, metavar="N",
        help="tile size in pixels, a power of two in [4, 64] "
             "(default: 16 for --gen, the file header for --trace)",
    )
    p.add_argument(
        "--crc", choices=sorted(_CRC_CHOICES), default="sliced4",
        help="CRC table layout (default: sliced4)",
    )
    p.add_argument("--threads", type=int, default=1, metavar="N",
                   help="tile rendering threads (default: 1)")
    p.add_argument("--memo-capacity", type=int, default=DEFAULT_MEMO_CAPACITY,
                   metavar="N", help="fragment memo entries (default: 65536)")
    p.add_argument("--cost", metavar="JSON",
                   help="cost parameter overrides: a JSON object, or a "
                        "path to a file holding one")
    p.add_argument("--verify", action="store_true",
                   help="check results against an internal render-everything lane")
    p.add_argument("--compare", action="store_true",
                   help="run every technique and print a comparison table")
    p.add_argument("--stats", metavar="FILE", help="write per-frame counters as CSV")
    p.add_argument("--dump-frames", metavar="DIR",
                   help="write each frame as a PPM image into DIR")
    p.add_argument("--dump-signatures", metavar="FILE",
                   help="write per-tile signatures as CSV (signature techniques only)")
    p.add_argument("--save-trace", metavar="FILE",
                   help="write the trace (and, with --gen, its expectation "
                        "sidecar) to FILE")
    p.add_argument("--dump-crc-tables", action="store_true",
                   help="print the CRC lookup tables for --crc and exit")
    return p


def _parse_gen_spec(spec: str):
    parts = spec.split(":")
    if len(parts) < 2:
        raise ConfigError("gen spec is kind:frames[:seed=N][:size=WxH]")
    kind = parts[0]
    try:
        frames = int(parts[1])
    except ValueError:
        raise ConfigError(f"bad frame count {parts[1]!r}") from None
    seed = 0
    width = height = 256
    for token in parts[2:]:
        if token.startswith("seed="):
            try:
                seed = int(token[5:])
            except ValueError:
                raise ConfigError(f"bad seed {token!r}") from None
        elif token.startswith("size="):
            dims = token[5:].split("x")
            try:
                width, height = int(dims[0]), int(dims[1])
            except (ValueError, IndexError):
                raise ConfigError(f"bad size {token!r}, expected WxH") from None
        else:
            raise ConfigError(f"unknown gen option {token!r}")
    return kind, frames, seed, width, height


def _load_cost(arg: str | None) -> CostParams:
    if arg is None:
        return CostParams()
    text = arg
    if not arg.lstrip().startswith("{"):
        try:
            with open(arg, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read cost file: {exc}") from None
    return CostParams.from_json(text)


def _check_tile_size(value: int) -> int:
    if value < 4 or value > 64 or value & (value - 1):
        raise ConfigError("tile size must be a power of two in [4, 64]")
    return value


def _dump_crc_tables(slice_count: int) -> None:
    tables = build_tables(slice_count)
    print("slice,index,value")
    for k, row in enumerate(tables.rows):
        for i, value in enumerate(row):
            print(f"{k},{i},0x{value:08x}")


def _print_summary(result, params: CostParams) -> None:
    tot = totals(result.frame_stats)
    cycles, energy = estimate(tot, params)
    n_frames = len(result.frame_stats)
    print(f"technique {result.technique.value}: {n_frames} frames, "
          f"{tot.tiles_total // max(1, n_frames)} tiles/frame "
          f"(kernel backend: {kernels.BACKEND})")
    pct = 100.0 * tot.tiles_skipped / tot.tiles_total if tot.tiles_total else 0.0
    print(f"tiles skipped {tot.tiles_skipped}/{tot.tiles_total} ({pct:.1f}%)")
    print(f"fragments shaded {tot.fragments_shaded}, texels fetched {tot.texels_fetched}")
    if tot.memo_lookups:
        hit_pct = 100.0 * tot.memo_hits / tot.memo_lookups
        print(f"memo hits {tot.memo_hits}/{tot.memo_lookups} ({hit_pct:.1f}%)")
    print(f"bytes written {tot.bytes_written}, bytes read {tot.bytes_read}, "
          f"crc bytes hashed {tot.crc_bytes_hashed}")
    print(f"modeled cycles {cycles:.0f}, modeled energy {energy:.0f}")
    print(f"frames fully skipped {result.fully_skipped_frames}/{n_frames}")
    if result.verify_report is not None:
        print(result.verify_report.summary())


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.dump_crc_tables:
            _dump_crc_tables(_CRC_CHOICES[args.crc])
            return 0
        if not args.trace and not args.gen:
            parser.error("one of --trace or --gen is required")

        if args.threads < 1:
            raise ConfigError("threads must be >= 1")
        if args.memo_capacity < 1:
            raise ConfigError("memo capacity must be >= 1")
        params = _load_cost(args.cost)

        expectations = None
        if args.gen:
            kind, frames, seed, width, height = _parse_gen_spec(args.gen)
            tile_size = args.tile_size if args.tile_size else 16
            _check_tile_size(tile_size)
            scene = generate_scene(kind, frames, seed, width, height, tile_size)
            trace = scene.trace
            expectations = scene.expectations
        else:
            try:
                with open(args.trace, "r", encoding="utf-8") as fh:
                    trace = parse_trace(fh.read())
            except OSError as exc:
                raise ConfigError(f"cannot read trace: {exc}") from None
            if args.tile_size and args.tile_size != trace.tile_size:
                _check_tile_size(args.tile_size)
                trace = trace.with_tile_size(args.tile_size)
            else:
                sidecar = args.trace + ".expect"
                if os.path.exists(sidecar):
                    with open(sidecar, "r", encoding="utf-8") as fh:
                        expectations = parse_expectations(fh.read())

        if args.save_trace:
            with open(args.save_trace, "w", encoding="utf-8") as fh:
                fh.write(serialize_trace(trace))
            if args.gen:
                with open(args.save_trace + ".expect", "w", encoding="utf-8") as fh:
                    fh.write(serialize_expectations(expectations))

        def options_for(technique: Technique) -> RunOptions:
            return RunOptions(
                technique=technique,
                crc_slices=_CRC_CHOICES[args.crc],
                threads=args.threads,
                memo_capacity=args.memo_capacity,
                verify=args.verify,
                collect_images=bool(args.dump_frames),
                collect_signatures=bool(args.dump_signatures),
                expectations=expectations,
            )

        if args.compare:
            sections = []
            verify_failed = False
            for technique in Technique:
                result = run_trace(trace, options_for(technique))
                sections.append((technique.value, result.frame_stats))
                if result.verify_report is not None and not result.verify_report.ok:
                    print(f"{technique.value}: {result.verify_report.summary()}",
                          file=sys.stderr)
                    verify_failed = True
            print(compare_report(sections, params), end="")
            if args.stats:
                with open(args.stats, "w", encoding="utf-8") as fh:
                    fh.write(render_csv(sections, params))
            return 2 if verify_failed else 0

        technique = Technique(args.technique)
        if args.dump_signatures and not technique.uses_signatures:
            raise ConfigError("--dump-signatures needs --technique re or re+te")
        result = run_trace(trace, options_for(technique))

        if args.stats:
            with open(args.stats, "w", encoding="utf-8") as fh:
                fh.write(render_csv([(technique.value, result.frame_stats)], params))
        if args.dump_frames:
            os.makedirs(args.dump_frames, exist_ok=True)
            for i, image in enumerate(result.images, start=1):
                write_ppm(os.path.join(args.dump_frames, f"frame_{i:04d}.ppm"), image)
        if args.dump_signatures:
            with open(args.dump_signatures, "w", encoding="utf-8") as fh:
                fh.write("frame,tile_x,tile_y,signature,length,skipped\n")
                for frame_no, tx, ty, sig, length, skipped in result.signature_rows:
                    fh.write(f"{frame_no},{tx},{ty},0x{sig:08x},{length},"
                             f"{int(skipped)}\n")

        _print_summary(result, params)
        if result.verify_report is not None and not result.verify_report.ok:
            return 2
        return 0
    except (TraceParseError, TraceDataError, ConfigError) as exc:
        print(f"tilesim: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"tilesim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
