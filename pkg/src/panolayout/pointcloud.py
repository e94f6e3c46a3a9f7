"""Point-cloud inputs for the shape encoder: layout, sparse and dense variants."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import DataError, DomainError
from .geometry import ImageGeometry, column_longitudes, direction
from .layout import LayoutPolygon, wall_distances

VARIANTS = ("dense", "sparse", "layout")
DEFAULT_POINTS = 8000


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    variant: str
    labels: Optional[np.ndarray] = None  # frame segment / face index per point

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise DomainError(f"unknown point-cloud variant {self.variant!r}")
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise DataError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]


def frame_segments(layout: LayoutPolygon) -> np.ndarray:
    """3D wire-frame of the room as ``(3E, 2, 3)`` segment endpoints.

    Order: floor edges, ceiling edges, then the vertical corner edges.
    """
    v = layout.floor_vertices
    nxt = np.roll(v, -1, axis=0)
    m = v.shape[0]
    fy = np.full(m, layout.floor_y)
    cy = np.full(m, layout.ceiling_y)

    def lift(xz, y):
        return np.column_stack([xz[:, 0], y, xz[:, 1]])

    floor = np.stack([lift(v, fy), lift(nxt, fy)], axis=1)
    ceil = np.stack([lift(v, cy), lift(nxt, cy)], axis=1)
    vert = np.stack([lift(v, fy), lift(v, cy)], axis=1)
    return np.concatenate([floor, ceil, vert])


def _check(layout: LayoutPolygon, n: int):
    if n <= 0:
        raise DomainError("n must be positive")
    if not layout.area > 0:
        raise DomainError("degenerate floor polygon")


def layout_pcd(layout: LayoutPolygon, n: int = DEFAULT_POINTS, seed: int = 0) -> PointCloud:
    """Points spread uniformly by arc length over the room's wire-frame."""
    _check(layout, n)
    seg = frame_segments(layout)
    lengths = np.linalg.norm(seg[:, 1] - seg[:, 0], axis=1)
    cum = np.cumsum(lengths)
    rng = np.random.default_rng(seed)
    s = rng.uniform(0.0, cum[-1], size=n)
    k = np.minimum(np.searchsorted(cum, s, side="right"), len(cum) - 1)
    t = (s - (cum[k] - lengths[k])) / lengths[k]
    t = np.clip(t, 0.0, 1.0)
    pts = seg[k, 0] + t[:, None] * (seg[k, 1] - seg[k, 0])
    return PointCloud(pts, "layout", k)


def _sample_polygon(rng, verts: np.ndarray, n: int) -> np.ndarray:
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    out = np.empty((0, 2))
    while out.shape[0] < n:
        cand = rng.uniform(lo, hi, size=(max(2 * (n - out.shape[0]), 64), 2))
        out = np.vstack([out, cand[kernels.points_in_polygon(cand, verts)]])
    return out[:n]


def sparse_pcd(layout: LayoutPolygon, n: int = DEFAULT_POINTS, seed: int = 0) -> PointCloud:
    """Points spread uniformly by area over walls, floor and ceiling.

    Labels: wall ``i`` is face ``i``; the floor is ``E`` and the ceiling
    ``E + 1``.
    """
    _check(layout, n)
    v = layout.floor_vertices
    nxt = np.roll(v, -1, axis=0)
    m = v.shape[0]
    wall_len = np.hypot(*(nxt - v).T)
    areas = np.concatenate([wall_len * layout.height, [layout.area, layout.area]])
    rng = np.random.default_rng(seed)
    face = rng.choice(m + 2, size=n, p=areas / areas.sum())
    pts = np.empty((n, 3))

    walls = np.nonzero(face < m)[0]
    t = rng.uniform(size=walls.size)
    y = rng.uniform(layout.floor_y, layout.ceiling_y, size=walls.size)
    f = face[walls]
    xz = v[f] + t[:, None] * (nxt[f] - v[f])
    pts[walls] = np.column_stack([xz[:, 0], y, xz[:, 1]])

    for label, height in ((m, layout.floor_y), (m + 1, layout.ceiling_y)):
        idx = np.nonzero(face == label)[0]
        xz = _sample_polygon(rng, v, idx.size)
        pts[idx] = np.column_stack([xz[:, 0], np.full(idx.size, height), xz[:, 1]])
    return PointCloud(pts, "sparse", face)


def render_depth(layout: LayoutPolygon, g: ImageGeometry) -> np.ndarray:
    """Euclidean distance from the camera to the room surface for every pixel."""
    lon = column_longitudes(g.width)
    lat = (0.5 - (np.arange(g.height) + 0.5) / g.height) * np.pi
    w = wall_distances(layout, lon)[None, :]
    s, c = np.sin(lat)[:, None], np.cos(lat)[:, None]
    t_wall = w / c
    with np.errstate(divide="ignore"):
        t_floor = np.where(s < 0, layout.camera_height / -s, np.inf)
        t_ceil = np.where(s > 0, layout.ceiling_y / s, np.inf)
    return np.minimum(t_wall, np.minimum(t_floor, t_ceil))


def dense_pcd(depth, g: ImageGeometry, n: int = DEFAULT_POINTS, seed: int = 0) -> PointCloud:
    """Back-project a random subset of depth pixels along their viewing rays."""
    depth = np.asarray(depth, dtype=float)
    if depth.shape != (g.height, g.width):
        raise DataError(f"depth map shape {depth.shape} does not match {g.height}x{g.width}")
    if n <= 0:
        raise DomainError("n must be positive")
    rng = np.random.default_rng(seed)
    idx = rng.choice(depth.size, size=n, replace=n > depth.size)
    rows, cols = np.divmod(idx, g.width)
    d = depth[rows, cols]
    if not np.all(np.isfinite(d) & (d > 0)):
        raise DataError("non-positive or non-finite depth at a sampled pixel")
    lon = ((cols + 0.5) / g.width - 0.5) * 2.0 * np.pi
    lat = (0.5 - (rows + 0.5) / g.height) * np.pi
    return PointCloud(direction(lon, lat) * d[:, None], "dense")


def generate(variant: str, layout: LayoutPolygon, g: ImageGeometry,
             n: int = DEFAULT_POINTS, seed: int = 0) -> PointCloud:
    if variant == "layout":
        return layout_pcd(layout, n, seed)
    if variant == "sparse":
        return sparse_pcd(layout, n, seed)
    if variant == "dense":
        return dense_pcd(render_depth(layout, g), g, n, seed)
    raise DomainError(f"unknown point-cloud variant {variant!r}; expected one of {VARIANTS}")


# ---------------------------------------------------------------------------
# encoder data contract


@dataclass(frozen=True)
class ShapeFeatureContract:
    num_points: int = DEFAULT_POINTS
    input_shape: tuple = (DEFAULT_POINTS, 3)
    affine_shape: tuple = (3, 3)
    mlp_widths: tuple = (64, 128, 256)
    pooled_shape: tuple = (256, 1)
    stacking: int = 512
    output_shape: tuple = (256, 512)
    concat_shape: tuple = (256, 1024)


_REFERENCE = ShapeFeatureContract()


@dataclass
class ContractReport:
    mismatches: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.mismatches


def validate_shape_contract(c: ShapeFeatureContract) -> ContractReport:
    """Compare encoder shapes with the reference configuration."""
    report = ContractReport()
    for name in _REFERENCE.__dataclass_fields__:
        got, want = getattr(c, name), getattr(_REFERENCE, name)
        if tuple(np.atleast_1d(got)) != tuple(np.atleast_1d(want)):
            report.mismatches.append(f"{name}: expected {want}, got {got}")
    # internal consistency, reported even when a field matches on its own
    if tuple(c.input_shape) != (c.num_points, 3):
        report.mismatches.append("input_shape must be (num_points, 3)")
    if c.pooled_shape[0] != c.mlp_widths[-1]:
        report.mismatches.append("pooled width must equal the last MLP width")
    if (c.pooled_shape[0], c.stacking) != tuple(c.output_shape):
        report.mismatches.append("stacked pooled features must give output_shape")
    if tuple(c.concat_shape) != (c.output_shape[0], 2 * c.output_shape[1]):
        report.mismatches.append("concatenated features must be N x 2D")
    return report


# ---------------------------------------------------------------------------
# XYZ text format


def write_xyz(path, cloud: PointCloud, seed: Optional[int] = None, header: bool = True):
    with open(path, "w") as fh:
        if header:
            fh.write(f"# {cloud.variant} {cloud.n} {'' if seed is None else seed}".rstrip() + "\n")
        for x, y, z in cloud.points:
            fh.write(f"{x:.9g} {y:.9g} {z:.9g}\n")


def read_xyz(path) -> PointCloud:
    variant = "layout"
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] in VARIANTS:
                    variant = parts[0]
                continue
            rows.append([float(t) for t in line.split()])
    return PointCloud(np.array(rows).reshape(-1, 3), variant)
