"""tilesim: a tile-based rendering pipeline simulator.

Models the two-phase tile pipeline (geometry/binning, then per-tile
rasterization into on-chip buffers) and several inter-frame redundancy
elimination techniques on top of it, with bit-exactness verification
and a configurable cost model.
"""

__version__ = "0.1.0"

from .trace import FrameTrace, DrawCommand, Vertex, Texture, Shader  # noqa: F401
from .scenes import generate_scene, SCENE_KINDS  # noqa: F401
from .redundancy import Technique, RunOptions, run_trace  # noqa: F401
from .stats import FrameStats, CostParams, estimate  # noqa: F401
