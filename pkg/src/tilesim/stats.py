"""Per-frame counters, the cycle/energy cost model, and CSV reporting.

Counters are raw event counts measured by the pipeline.  Cycles and
energy are modeled quantities derived from them through CostParams, so
every speedup or saving quoted from them is only as good as the chosen
coefficients.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError


@dataclass
class FrameStats:
    """Raw event counts for one frame (or a sum of frames)."""

    tiles_total: int = 0
    tiles_skipped: int = 0
    fragments_shaded: int = 0
    texels_fetched: int = 0
    bytes_read: int = 0
    bytes_written: int = 0
    crc_bytes_hashed: int = 0
    memo_hits: int = 0
    memo_lookups: int = 0
    vertices_transformed: int = 0
    triangles_binned: int = 0

    def __add__(self, other: "FrameStats") -> "FrameStats":
        return FrameStats(*(
            getattr(self, f.name) + getattr(other, f.name) for f in fields(self)
        ))


@dataclass(frozen=True)
class CostParams:
    """Cost coefficients.  Cycles model on-chip work (no DRAM term);
    energy models switching plus DRAM traffic (no vertex term, vertex
    work is negligible at these triangle counts)."""

    cycles_per_vertex: float = 8.0
    cycles_per_fragment: float = 16.0
    cycles_per_texel: float = 4.0
    cycles_per_crc_byte: float = 0.25
    energy_per_fragment: float = 40.0
    energy_per_texel: float = 12.0
    energy_per_crc_byte: float = 0.05
    energy_per_dram_byte: float = 20.0

    @classmethod
    def from_json(cls, text: str) -> "CostParams":
        """Defaults overridden by a (possibly partial) JSON object."""
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad cost JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("cost JSON must be an object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown cost parameter(s): {', '.join(sorted(unknown))}")
        for key, value in data.items():
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"cost parameter {key} must be a number")
            if value < 0:
                raise ConfigError(f"cost parameter {key} must be >= 0")
        return replace(cls(), **{k: float(v) for k, v in data.items()})


def estimate(stats: FrameStats, params: CostParams):
    """Model one frame's (cycles, energy) from its counters."""
    cycles = (
        stats.vertices_transformed * params.cycles_per_vertex
        + stats.fragments_shaded * params.cycles_per_fragment
        + stats.texels_fetched * params.cycles_per_texel
        + stats.crc_bytes_hashed * params.cycles_per_crc_byte
    )
    energy = (
        stats.fragments_shaded * params.energy_per_fragment
        + stats.texels_fetched * params.energy_per_texel
        + stats.crc_bytes_hashed * params.energy_per_crc_byte
        + (stats.bytes_read + stats.bytes_written) * params.energy_per_dram_byte
    )
    return cycles, energy


CSV_COLUMNS = (
    "technique", "frame", "tiles_total", "tiles_skipped", "fragments_shaded",
    "texels_fetched", "bytes_read", "bytes_written", "crc_bytes_hashed",
    "memo_hits", "memo_lookups", "modeled_cycles", "modeled_energy",
)


def _fmt(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


def render_csv(sections, params: CostParams) -> str:
    """CSV text for one or more runs.  ``sections`` is a list of
    (technique_name, per_frame_stats) pairs; frames are 1-indexed."""
    lines = [",".join(CSV_COLUMNS)]
    for technique, frames in sections:
        for frame_no, st in enumerate(frames, start=1):
            cycles, energy = estimate(st, params)
            lines.append(",".join((
                technique, str(frame_no),
                str(st.tiles_total), str(st.tiles_skipped),
                str(st.fragments_shaded), str(st.texels_fetched),
                str(st.bytes_read), str(st.bytes_written),
                str(st.crc_bytes_hashed),
                str(st.memo_hits), str(st.memo_lookups),
                _fmt(cycles), _fmt(energy),
            )))
    return "\n".join(lines) + "\n"


def read_csv(text: str) -> list:
    """Parse render_csv output into dicts with numeric fields."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != ",".join(CSV_COLUMNS):
        raise ConfigError("unrecognized stats CSV header")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ConfigError(f"bad stats CSV row: {line!r}")
        row = {"technique": parts[0]}
        for name, token in zip(CSV_COLUMNS[1:], parts[1:]):
            row[name] = float(token) if "." in token or "e" in token else int(token)
        rows.append(row)
    return rows


def totals(frames) -> FrameStats:
    out = FrameStats()
    for st in frames:
        out = out + st
    return out


def compare_report(sections, params: CostParams) -> str:
    """Human-readable comparison of several techniques over the same
    trace.  The first section is the baseline for the ratio columns."""
    header = (
        f"{'technique':<10} {'cycles':>14} {'energy':>16} {'dram bytes':>13} "
        f"{'skipped':>9} {'memo hit%':>9} {'vs ' + sections[0][0]:>10}"
    )
    lines = [header, "-" * len(header)]
    base_cycles = None
    per_frame_base = None
    geomean_line = ""
    for technique, frames in sections:
        tot = totals(frames)
        cycles, energy = estimate(tot, params)
        dram = tot.bytes_read + tot.bytes_written
        skip = (f"{100.0 * tot.tiles_skipped / tot.tiles_total:.1f}%"
                if tot.tiles_total else "-")
        hit = (f"{100.0 * tot.memo_hits / tot.memo_lookups:.1f}%"
               if tot.memo_lookups else "-")
        if base_cycles is None:
            base_cycles = cycles
            per_frame_base = [estimate(st, params)[0] for st in frames]
            ratio = "1.00x"
        else:
            ratio = f"{base_cycles / cycles:.2f}x" if cycles else "-"
            if technique == "re" and len(frames) == len(per_frame_base):
                logs = []
                for st, base in zip(frames, per_frame_base):
                    c, _ = estimate(st, params)
                    if c > 0 and base > 0:
                        logs.append(math.log(base / c))
                if logs:
                    geo = math.exp(sum(logs) / len(logs))
                    geomean_line = (
                        f"per-frame geomean speedup, re vs {sections[0][0]}: "
                        f"{geo:.2f}x (cost-model dependent)"
                    )
        lines.append(
            f"{technique:<10} {_fmt(cycles):>14} {_fmt(energy):>16} {dram:>13} "
            f"{skip:>9} {hit:>9} {ratio:>10}"
        )
    if geomean_line:
        lines.append("")
        lines.append(geomean_line)
    return "\n".join(lines) + "\n"
