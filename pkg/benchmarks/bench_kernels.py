"""Compare the compiled and numpy kernel backends on representative inputs.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``.
"""

import argparse
import timeit

import numpy as np

from panolayout import _kernels_py
from panolayout.geometry import column_longitudes
from panolayout.layout import generate_synthetic_room

try:
    from panolayout import _kernels as _compiled
except ImportError:
    _compiled = None


def cases():
    room = generate_synthetic_room(3, "T")
    verts = np.ascontiguousarray(room.floor_vertices)
    seg = np.ascontiguousarray(room.segments().reshape(-1, 4))
    lon = np.ascontiguousarray(column_longitudes(1024))
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    cx, cz = (hi - lo) / 512
    pts = np.random.default_rng(0).uniform(lo, hi, size=(100_000, 2))
    return {
        "ray_cast 1024 columns": lambda k: k.ray_cast(lon, seg),
        "coverage 512x512": lambda k: k.coverage(verts, lo[0], lo[1], cx, cz, 512, 512),
        "points_in_polygon 1e5": lambda k: k.points_in_polygon(pts, verts),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    backends = {"python": _kernels_py}
    if _compiled is not None:
        backends["cython"] = _compiled
    print(f"{'kernel':<24}" + "".join(f"{b:>12}" for b in backends) + "     speedup")
    for name, fn in cases().items():
        times = {}
        for b, mod in backends.items():
            fn(mod)
            times[b] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        row = f"{name:<24}" + "".join(f"{1e3 * t:>10.3f}ms" for t in times.values())
        if "cython" in times:
            row += f"{times['python'] / times['cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
