"""Kernel backends for the hot inner loops.

Two interchangeable implementations exist:

- ``_native``: a compiled Cython extension (built by setup.py),
- ``_python``: a pure-Python fallback with identical semantics.

The native backend is selected automatically at import time when the
extension is importable; otherwise the fallback is used.  Both produce
bit-identical framebuffers, checksums, and counters — the compiled one
is just faster.  ``use()`` switches the active backend at runtime,
which tests and the benchmark harness rely on.

Backend entry points (duck-typed, see ``_python`` for the reference
signatures):

- ``crc_update(reg, data, tables)``: raw CRC register update over a
  byte string using ``tables.rows`` / ``tables.array`` lookup tables.
- ``raster_tri(...)``: rasterize one screen triangle into a tile's
  color/depth buffers; returns (fragments_shaded, texels_fetched).
- ``raster_tri_memo(...)``: same, consulting a fragment memo cache;
  returns (fragments_shaded, texels_fetched, memo_hits, memo_lookups).
"""

from . import _python as python

try:
    from . import _native as native
except ImportError:
    native = None

ACTIVE = native if native is not None else python
BACKEND = "native" if native is not None else "python"


def available() -> tuple[str, ...]:
    """Names of the backends importable in this environment."""
    return ("native", "python") if native is not None else ("python",)


def get(name: str):
    if name == "python":
        return python
    if name == "native":
        if native is None:
            raise RuntimeError("native kernel extension is not built")
        return native
    raise ValueError(f"unknown kernel backend {name!r}")


def use(name: str) -> None:
    """Switch the active backend ("native" or "python")."""
    global ACTIVE, BACKEND
    ACTIVE = get(name)
    BACKEND = name
