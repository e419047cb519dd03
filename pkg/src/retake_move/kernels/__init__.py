"""Hot geometry and transport kernels.

The compiled extension is used when it was built; otherwise, or when
``RETAKE_MOVE_PURE_PYTHON=1`` is set, the pure-Python twins are used.  Both
backends return identical results.
"""

import os

from . import _pykernels

_impl = _pykernels
BACKEND = "python"

if not os.environ.get("RETAKE_MOVE_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

segment_blocked = _impl.segment_blocked
visibility_matrix = _impl.visibility_matrix
points_visible = _impl.points_visible
ray_wall_distance = _impl.ray_wall_distance
ray_aabb = _impl.ray_aabb
sweep_move = _impl.sweep_move
transport = _impl.transport


def backends():
    """Map of backend name to kernel module, for comparison and benchmarks."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out


__all__ = [
    "BACKEND",
    "backends",
    "points_visible",
    "ray_aabb",
    "ray_wall_distance",
    "segment_blocked",
    "sweep_move",
    "transport",
    "visibility_matrix",
]
