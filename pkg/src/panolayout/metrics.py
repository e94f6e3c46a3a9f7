"""Layout evaluation metrics: 2D/3D IoU, corner error and pixel error."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np

from . import kernels
from .errors import CountMismatchError, DomainError
from .geometry import ImageGeometry
from .layout import (
    BoundaryAnnotation,
    CornerSet,
    LayoutPolygon,
    polygon_from_corners,
    polygon_to_boundaries,
    scene_has_occlusion,
)

CSV_FIELDS = ("id", "iou2d", "iou3d", "ce", "pe", "occluded")


@dataclass
class MetricsReport:
    iou2d: float
    iou3d: float
    ce: Optional[float] = None
    pe: Optional[float] = None
    occluded: bool = False
    id: str = ""

    def to_row(self) -> dict:
        def fmt(x):
            return "" if x is None else repr(float(x))

        return {
            "id": self.id,
            "iou2d": fmt(self.iou2d),
            "iou3d": fmt(self.iou3d),
            "ce": fmt(self.ce),
            "pe": fmt(self.pe),
            "occluded": str(bool(self.occluded)).lower(),
        }

    def to_dict(self) -> dict:
        return asdict(self)


def raster_areas(a: LayoutPolygon, b: LayoutPolygon, resolution: int = 512):
    """Covered cell totals ``(s_a, s_b, s_both, s_either)`` over the union's bounding box.

    Cells carry their exact covered fraction, so totals are fractional cell
    counts; per cell the shared part is the smaller of the two fractions and
    the joint part the larger.
    """
    if resolution < 1:
        raise DomainError("resolution must be at least 1")
    for p in (a, b):
        if not p.area > 0:
            raise DomainError("degenerate (zero-area) polygon")
    va, vb = a.floor_vertices, b.floor_vertices
    lo = np.minimum(va.min(axis=0), vb.min(axis=0))
    hi = np.maximum(va.max(axis=0), vb.max(axis=0))
    cx, cz = (hi - lo) / resolution
    ca = kernels.coverage(va, lo[0], lo[1], cx, cz, resolution, resolution)
    cb = kernels.coverage(vb, lo[0], lo[1], cx, cz, resolution, resolution)
    return (float(ca.sum()), float(cb.sum()),
            float(np.minimum(ca, cb).sum()), float(np.maximum(ca, cb).sum()))


def iou_2d(a: LayoutPolygon, b: LayoutPolygon, resolution: int = 512) -> float:
    """Floor-plan IoU in percent, by rasterisation."""
    _, _, s_int, s_uni = raster_areas(a, b, resolution)
    return 100.0 * s_int / s_uni if s_uni > 0 else 0.0


def iou_3d(a: LayoutPolygon, b: LayoutPolygon, resolution: int = 512) -> float:
    """Extruded-volume IoU in percent; floors must share one plane."""
    if not np.isclose(a.floor_y, b.floor_y, rtol=1e-9, atol=1e-12):
        raise DomainError("layouts must share the floor plane")
    s_a, s_b, s_int, s_uni = raster_areas(a, b, resolution)
    m = min(a.height, b.height)
    # in units of the shared height; the extra terms vanish for equal heights
    denom = s_uni + s_a * (a.height / m - 1.0) + s_b * (b.height / m - 1.0)
    return 100.0 * s_int / denom if denom > 0 else 0.0


def _as_points(c) -> np.ndarray:
    """Corner points shaped ``(K, 2, 2)``: corner, ceiling/floor, ``(u, v)``."""
    pts = c.points() if isinstance(c, CornerSet) else np.asarray(c, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] % 2:
        raise DomainError("corner points must be a (2K, 2) array of (u, v), ceiling first")
    k = pts.shape[0] // 2
    return np.stack([pts[:k], pts[k:]], axis=1)


def _match_shift(gt: np.ndarray, pred: np.ndarray, width: int):
    """Circular shift of ``pred`` corners that minimises the summed distance."""
    best = None
    for s in range(gt.shape[0]):
        p = np.roll(pred, s, axis=0)
        du = np.abs(p[..., 0] - gt[..., 0])
        du = np.minimum(du, width - du)
        d = np.hypot(du, p[..., 1] - gt[..., 1])
        if best is None or d.sum() < best.sum():
            best = d
    return best


def corner_error(gt, pred, g: ImageGeometry) -> float:
    """Mean corner displacement as a percentage of the image diagonal.

    Accepts :class:`CornerSet` objects or ``(2K, 2)`` point arrays (ceiling
    points first). Ceiling and floor corners count as separate points;
    horizontal offsets wrap around the panorama seam.
    """
    a, b = _as_points(gt), _as_points(pred)
    if a.shape != b.shape:
        raise CountMismatchError(f"{a.shape[0]} ground-truth vs {b.shape[0]} predicted corners")
    if a.shape[0] == 0:
        raise DomainError("no corners to compare")
    d = _match_shift(a, b, g.width)
    return 100.0 * float(d.mean()) / float(np.hypot(g.width, g.height))


def _per_pixel_rows(a: BoundaryAnnotation) -> np.ndarray:
    g = a.geometry
    if a.num_columns == g.width:
        return a.rows()
    src = (np.arange(a.num_columns) + 0.5) * (g.width / a.num_columns) - 0.5
    dst = np.arange(g.width, dtype=float)
    return np.stack([np.interp(dst, src, r, period=g.width) for r in a.rows()])


def semantic_mask(a: BoundaryAnnotation) -> np.ndarray:
    """Per-pixel class: 0 ceiling, 1 wall, 2 floor."""
    g = a.geometry
    vc, vf = _per_pixel_rows(a)
    r = np.arange(g.height, dtype=float)[:, None]
    out = np.ones((g.height, g.width), dtype=np.uint8)
    out[r < vc[None, :]] = 0
    out[r > vf[None, :]] = 2
    return out


def pixel_error(gt: BoundaryAnnotation, pred: BoundaryAnnotation) -> float:
    """Percentage of pixels whose ceiling/wall/floor class disagrees."""
    if gt.geometry != pred.geometry or gt.num_columns != pred.num_columns:
        raise DomainError("gt and pred must share geometry and column count")
    return 100.0 * float(np.mean(semantic_mask(gt) != semantic_mask(pred)))


def evaluate_pair(gt: CornerSet, pred: CornerSet, g: ImageGeometry,
                  resolution: int = 512, id: str = "") -> MetricsReport:
    """All metrics for one annotated/predicted corner pair.

    CE and PE are only defined for four-corner (cuboid) rooms and are left
    empty otherwise.
    """
    pa = polygon_from_corners(gt, g)
    pb = polygon_from_corners(pred, g)
    ce = pe = None
    if len(gt) == 4 and len(pred) == 4:
        ce = corner_error(gt, pred, g)
        pe = pixel_error(
            polygon_to_boundaries(pa, g, g.width), polygon_to_boundaries(pb, g, g.width)
        )
    return MetricsReport(
        iou2d=iou_2d(pa, pb, resolution),
        iou3d=iou_3d(pa, pb, resolution),
        ce=ce,
        pe=pe,
        occluded=scene_has_occlusion(pa),
        id=id,
    )


def write_metrics_csv(path, reports: Iterable[MetricsReport]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for r in reports:
            writer.writerow(r.to_row())
