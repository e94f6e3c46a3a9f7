"""Kernel dispatch: compiled extension when available, numpy otherwise.

Set ``PANOLAYOUT_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("PANOLAYOUT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"


def ray_cast(lon, seg):
    lon = np.ascontiguousarray(np.atleast_1d(lon), dtype=np.float64)
    seg = np.ascontiguousarray(seg, dtype=np.float64).reshape(-1, 4)
    return _impl.ray_cast(lon, seg)


def coverage(verts, x0, z0, cx, cz, nx, nz):
    """Fraction of each cell of an ``nz x nx`` grid covered by the polygon."""
    verts = np.array(verts, dtype=np.float64, order="C")
    lo = np.array([x0, z0])
    hi = lo + np.array([cx * nx, cz * nz])
    slack = 1e-9 * (hi - lo)
    if np.any(verts < lo - slack) or np.any(verts > hi + slack):
        raise ValueError("polygon extends outside the raster grid")
    np.clip(verts, lo, hi, out=verts)
    return _impl.coverage(
        verts, float(x0), float(z0), float(cx), float(cz), int(nx), int(nz)
    )


def points_in_polygon(pts, verts):
    pts = np.ascontiguousarray(pts, dtype=np.float64).reshape(-1, 2)
    verts = np.ascontiguousarray(verts, dtype=np.float64)
    return np.asarray(_impl.points_in_polygon(pts, verts), dtype=bool)
