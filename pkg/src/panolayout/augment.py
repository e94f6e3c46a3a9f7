"""Annotation-space augmentation: flip, rotation, Pano Stretch and Cutout.

Image-space effects (luminance, pixel warping, painting the Cutout squares)
belong to the image pipeline; only their annotation side lives here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .geometry import ImageGeometry, column_longitudes, lat_to_v
from .layout import (
    BoundaryAnnotation,
    CornerSet,
    boundary_sections,
    polygon_from_corners,
    polygon_to_boundaries,
)


@dataclass(frozen=True)
class StretchParams:
    kx: float = 1.0
    kz: float = 1.0

    def __post_init__(self):
        for k in (self.kx, self.kz):
            if not (np.isfinite(k) and k > 0):
                raise DomainError("stretch factors must be positive and finite")

    def inverse(self) -> "StretchParams":
        return StretchParams(1.0 / self.kx, 1.0 / self.kz)


@dataclass(frozen=True)
class CutoutSpec:
    side: int = 50
    count: int = 3
    probability: float = 0.5

    def __post_init__(self):
        if self.side <= 0 or self.count < 0 or not 0 <= self.probability <= 1:
            raise DomainError("invalid cutout specification")


def sample_stretch(rng: np.random.Generator, low: float = 0.5, high: float = 2.0) -> StretchParams:
    """Log-uniform stretch factors in ``[low, high]``."""
    kx, kz = np.exp(rng.uniform(np.log(low), np.log(high), size=2))
    return StretchParams(float(kx), float(kz))


def stretch_points(points, p: StretchParams) -> np.ndarray:
    """Apply the stretch to camera-frame 3D points; ``y`` is untouched."""
    pts = np.array(points, dtype=float)
    pts[..., 0] *= p.kx
    pts[..., 2] *= p.kz
    return pts


def _stretch_by_interpolation(a: BoundaryAnnotation, p: StretchParams) -> BoundaryAnnotation:
    g = a.geometry
    lon = column_longitudes(a.num_columns)
    w, yc = boundary_sections(a)
    x = p.kx * w * np.sin(lon)
    z = p.kz * w * np.cos(lon)
    lon2 = np.arctan2(x, z)
    w2 = np.hypot(x, z)
    vf = lat_to_v(-np.arctan2(g.camera_height, w2), g)
    vc = lat_to_v(np.arctan2(yc, w2), g)
    order = np.argsort(lon2)
    # the map keeps angular order, so longitude stays monotone after sorting
    vf = np.interp(lon, lon2[order], vf[order], period=2 * np.pi)
    vc = np.interp(lon, lon2[order], vc[order], period=2 * np.pi)
    return BoundaryAnnotation(g, vc, vf)


def pano_stretch(a: BoundaryAnnotation, p: StretchParams, g: ImageGeometry = None) -> BoundaryAnnotation:
    """Scale the room along x and z and re-project the annotation.

    With a corner set the stretched corner polygon is re-rendered on the
    original column grid, which is exact for planar walls. Without corners
    the stretched boundary samples are re-gridded by piecewise-linear
    interpolation in longitude.
    """
    g = g or a.geometry
    if a.geometry != g:
        raise DomainError("annotation geometry differs from the requested geometry")
    if a.corners is not None and len(a.corners) >= 4:
        room = polygon_from_corners(a.corners, g).scaled(p.kx, p.kz)
        return polygon_to_boundaries(room, g, a.num_columns)
    return _stretch_by_interpolation(a, p)


def horizontal_rotate(a: BoundaryAnnotation, shift: int) -> BoundaryAnnotation:
    """Rotate the panorama by ``shift`` columns of the annotation grid."""
    corners = None
    if a.corners is not None:
        du = shift * a.geometry.width / a.num_columns
        c = a.corners.corners.copy()
        c[:, 0] = np.mod(c[:, 0] + du, a.geometry.width)
        corners = CornerSet.from_unsorted(c)
    return BoundaryAnnotation(
        a.geometry, np.roll(a.v_ceiling, shift), np.roll(a.v_floor, shift), corners
    )


def horizontal_flip(a: BoundaryAnnotation) -> BoundaryAnnotation:
    corners = None
    if a.corners is not None:
        c = a.corners.corners.copy()
        c[:, 0] = a.geometry.width - 1 - c[:, 0]
        corners = CornerSet.from_unsorted(c)
    return BoundaryAnnotation(a.geometry, a.v_ceiling[::-1], a.v_floor[::-1], corners)


def adjust_luminance(a: BoundaryAnnotation, factor: float = 1.0) -> BoundaryAnnotation:
    """Luminance changes leave geometry untouched; the annotation passes through."""
    if not factor > 0:
        raise DomainError("luminance factor must be positive")
    return a


def cutout_masks(gt_corners: CornerSet, spec: CutoutSpec = CutoutSpec(), seed=None,
                 g: ImageGeometry = ImageGeometry()) -> list:
    """Square masks centred on randomly chosen corner points.

    Returns ``(x0, y0, x1, y1)`` half-open pixel rectangles clipped to the
    image, or an empty list when the coin flip says no cutout.
    """
    pts = gt_corners.points()
    if pts.shape[0] < spec.count:
        raise DomainError(f"{pts.shape[0]} corner points cannot anchor {spec.count} masks")
    rng = np.random.default_rng(seed)
    if not rng.random() < spec.probability:
        return []
    chosen = rng.choice(pts.shape[0], size=spec.count, replace=False)
    half = spec.side // 2
    rects = []
    for u, v in pts[np.sort(chosen)]:
        x0 = int(round(u)) - half
        y0 = int(round(v)) - half
        rects.append((
            max(x0, 0), max(y0, 0),
            min(x0 + spec.side, g.width), min(y0 + spec.side, g.height),
        ))
    return rects
