"""Layout data model, occlusion rules, boundary rendering and synthetic rooms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, InvalidBoundaryError
from .geometry import (
    EPS_LAT,
    ImageGeometry,
    column_longitudes,
    floor_distance,
    lat_to_v,
    project_point,
    v_to_lat,
)

SHAPES = ("cuboid", "L", "T")


@dataclass(frozen=True, eq=False)
class CornerSet:
    """Corner triples ``(u, v_ceiling, v_floor)`` sorted by ``u``.

    Sorting is by longitude with ties broken by the smaller ceiling row.
    """

    corners: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.corners, dtype=float).reshape(-1, 3)
        if c.shape[0] and np.any(np.diff(c[:, 0]) < 0):
            raise DomainError("corners must be ordered by increasing u")
        object.__setattr__(self, "corners", c)

    @classmethod
    def from_unsorted(cls, corners) -> "CornerSet":
        c = np.asarray(corners, dtype=float).reshape(-1, 3)
        order = np.lexsort((c[:, 1], c[:, 0]))
        return cls(c[order])

    def __len__(self):
        return self.corners.shape[0]

    @property
    def u(self):
        return self.corners[:, 0]

    @property
    def v_ceiling(self):
        return self.corners[:, 1]

    @property
    def v_floor(self):
        return self.corners[:, 2]

    def points(self) -> np.ndarray:
        """All corner points, ceiling then floor, shape ``(2K, 2)`` as (u, v)."""
        ceil = np.stack([self.u, self.v_ceiling], axis=1)
        flr = np.stack([self.u, self.v_floor], axis=1)
        return np.concatenate([ceil, flr])


@dataclass(frozen=True, eq=False)
class BoundaryAnnotation:
    """Per-column ceiling/floor boundary rows of one panorama.

    Column ``i`` of ``num_columns`` samples the longitude at the centre of
    the ``i``-th equal-width bin, see :func:`geometry.column_longitudes`.
    """

    geometry: ImageGeometry
    v_ceiling: np.ndarray
    v_floor: np.ndarray
    corners: Optional[CornerSet] = None

    def __post_init__(self):
        vc = np.asarray(self.v_ceiling, dtype=float).copy()
        vf = np.asarray(self.v_floor, dtype=float).copy()
        if vc.ndim != 1 or vc.shape != vf.shape or vc.size == 0:
            raise DomainError("boundary arrays must be 1-D with equal length")
        g = self.geometry
        if not (np.all(np.isfinite(vc)) and np.all(np.isfinite(vf))):
            raise InvalidBoundaryError("boundary rows must be finite")
        if np.any(vc < 0) or np.any(vf >= g.height):
            raise InvalidBoundaryError("boundary rows outside the image")
        if np.any(v_to_lat(vc, g) <= EPS_LAT) or np.any(v_to_lat(vf, g) >= -EPS_LAT):
            raise InvalidBoundaryError("ceiling must lie above and floor below the horizon")
        vc.flags.writeable = False
        vf.flags.writeable = False
        object.__setattr__(self, "v_ceiling", vc)
        object.__setattr__(self, "v_floor", vf)

    @property
    def num_columns(self) -> int:
        return self.v_ceiling.size

    def rows(self) -> np.ndarray:
        """Boundary rows stacked as ``(2, num_columns)``: ceiling, floor."""
        return np.stack([self.v_ceiling, self.v_floor])

    def with_rows(self, rows, corners=None) -> "BoundaryAnnotation":
        return BoundaryAnnotation(self.geometry, rows[0], rows[1], corners)


@dataclass(frozen=True, eq=False)
class LayoutPolygon:
    """Floor polygon in the camera frame plus the ceiling plane height.

    ``floor_vertices`` are ``(x, z)`` pairs in counter-clockwise order.
    """

    floor_vertices: np.ndarray
    floor_y: float
    ceiling_y: float

    def __post_init__(self):
        v = np.asarray(self.floor_vertices, dtype=float).reshape(-1, 2)
        if v.shape[0] < 3:
            raise DomainError("a polygon needs at least three vertices")
        if not self.ceiling_y > self.floor_y:
            raise DomainError("ceiling must be above the floor")
        a = _signed_area(v)
        if not abs(a) > 0:
            raise DomainError("degenerate (zero-area) floor polygon")
        if a < 0:
            v = v[::-1].copy()
        object.__setattr__(self, "floor_vertices", v)

    @property
    def area(self) -> float:
        return _signed_area(self.floor_vertices)

    @property
    def height(self) -> float:
        return self.ceiling_y - self.floor_y

    @property
    def volume(self) -> float:
        return self.area * self.height

    @property
    def camera_height(self) -> float:
        return -self.floor_y

    def segments(self) -> np.ndarray:
        v = self.floor_vertices
        return np.concatenate([v, np.roll(v, -1, axis=0)], axis=1)

    def contains(self, xz) -> np.ndarray:
        return kernels.points_in_polygon(np.asarray(xz, dtype=float), self.floor_vertices)

    def scaled(self, kx: float, kz: float) -> "LayoutPolygon":
        v = self.floor_vertices * np.array([kx, kz])
        return LayoutPolygon(v, self.floor_y, self.ceiling_y)

    def manhattan_angle(self) -> float:
        """Rotation (mod pi/2) that best aligns the edges with the axes."""
        d = np.diff(np.vstack([self.floor_vertices, self.floor_vertices[:1]]), axis=0)
        ang = np.mod(np.arctan2(d[:, 1], d[:, 0]), np.pi / 2)
        # circular mean with period pi/2
        w = np.hypot(d[:, 0], d[:, 1])
        m = np.angle(np.sum(w * np.exp(4j * ang))) / 4
        return float(np.mod(m, np.pi / 2))

    def is_manhattan(self, tol: float = 1e-6) -> bool:
        theta = self.manhattan_angle()
        c, s = np.cos(-theta), np.sin(-theta)
        v = self.floor_vertices @ np.array([[c, s], [-s, c]])
        d = np.diff(np.vstack([v, v[:1]]), axis=0)
        scale = np.max(np.abs(v))
        return bool(np.all(np.min(np.abs(d), axis=1) <= tol * scale))


@dataclass(frozen=True, eq=False)
class OcclusionMask:
    columns: np.ndarray
    corners_occluded: bool = False


def _signed_area(v) -> float:
    x, z = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(z, -1) - np.roll(x, -1) * z))


# ---------------------------------------------------------------------------
# occlusion


def detect_occlusion_columns(
    a: BoundaryAnnotation,
    threshold: float = 5.0,
    dilation: int = 0,
    layout: Optional[LayoutPolygon] = None,
) -> OcclusionMask:
    """Flag columns next to a boundary discontinuity.

    A column and its circular successor are flagged when either boundary
    jumps by more than ``threshold`` rows between them. The rule assumes
    the annotation is sampled once per image column; coarser sampling
    turns steep but continuous boundaries into false jumps.
    ``dilation`` widens every flagged run by that many columns.
    """
    rows = a.rows()
    jump = np.abs(rows - np.roll(rows, -1, axis=1)) > threshold
    pair = jump.any(axis=0)
    cols = pair | np.roll(pair, 1)
    if dilation > 0:
        grown = cols.copy()
        for k in range(1, dilation + 1):
            grown |= np.roll(cols, k) | np.roll(cols, -k)
        cols = grown
    if layout is None and a.corners is not None and len(a.corners) >= 4:
        try:
            layout = polygon_from_corners(a.corners, a.geometry)
        except DomainError:
            layout = None
    occluded = scene_has_occlusion(layout) if layout is not None else False
    return OcclusionMask(cols, occluded)


def pool_mask(columns, num_columns: int) -> np.ndarray:
    """Reduce a fine column mask to ``num_columns`` bins (any-rule)."""
    columns = np.asarray(columns, dtype=bool)
    if columns.size % num_columns:
        raise DomainError("mask length must be a multiple of num_columns")
    return columns.reshape(num_columns, -1).any(axis=1)


def _camera_inside(layout: LayoutPolygon) -> bool:
    return bool(layout.contains(np.zeros((1, 2)))[0])


def scene_has_occlusion(layout: LayoutPolygon, g: Optional[ImageGeometry] = None) -> bool:
    """True when some floor corner is hidden from the camera by another wall."""
    if not _camera_inside(layout):
        raise DomainError("camera must be inside the floor polygon")
    v = layout.floor_vertices
    m = v.shape[0]
    seg = layout.segments()
    for i in range(m):
        others = [k for k in range(m) if k != i and k != (i - 1) % m]
        r = float(np.hypot(*v[i]))
        lon = np.arctan2(v[i, 0], v[i, 1])
        dist, _ = kernels.ray_cast(np.array([lon]), seg[others])
        if dist[0] < r * (1.0 - 1e-9):
            return True
    return False


# ---------------------------------------------------------------------------
# rendering


def wall_distances(layout: LayoutPolygon, lon) -> np.ndarray:
    """Nearest wall distance along horizontal rays at ``lon``."""
    if not _camera_inside(layout):
        raise DomainError("camera must be inside the floor polygon")
    dist, _ = kernels.ray_cast(np.asarray(lon, dtype=float), layout.segments())
    if not np.all(np.isfinite(dist)):
        raise DomainError("ray escaped the floor polygon")
    return dist


def polygon_to_corners(layout: LayoutPolygon, g: ImageGeometry) -> CornerSet:
    v = layout.floor_vertices
    n = v.shape[0]
    flr = np.column_stack([v[:, 0], np.full(n, layout.floor_y), v[:, 1]])
    ceil = np.column_stack([v[:, 0], np.full(n, layout.ceiling_y), v[:, 1]])
    u, vf = project_point(flr, g)
    _, vc = project_point(ceil, g)
    return CornerSet.from_unsorted(np.column_stack([u, vc, vf]))


def polygon_to_boundaries(
    layout: LayoutPolygon, g: ImageGeometry, num_columns: int = 256
) -> BoundaryAnnotation:
    """Render the visible ceiling/floor boundaries by nearest-hit ray casting."""
    if not np.isclose(layout.camera_height, g.camera_height, rtol=1e-12, atol=0):
        raise DomainError("layout floor does not match the camera height")
    w = wall_distances(layout, column_longitudes(num_columns))
    v_floor = lat_to_v(-np.arctan2(g.camera_height, w), g)
    v_ceil = lat_to_v(np.arctan2(layout.ceiling_y, w), g)
    return BoundaryAnnotation(g, v_ceil, v_floor, polygon_to_corners(layout, g))


def boundary_sections(a: BoundaryAnnotation):
    """Per-column wall distance ``w`` and ceiling height above the camera."""
    g = a.geometry
    w = floor_distance(a.v_floor, g)
    yc = w * np.tan(v_to_lat(a.v_ceiling, g))
    return w, yc


def boundary_polygon(a: BoundaryAnnotation) -> LayoutPolygon:
    """Visible-floor polygon traced by the per-column floor points."""
    w, yc = boundary_sections(a)
    lon = column_longitudes(a.num_columns)
    verts = np.column_stack([w * np.sin(lon), w * np.cos(lon)])
    return LayoutPolygon(verts, -a.geometry.camera_height, float(np.mean(yc)))


# ---------------------------------------------------------------------------
# corner <-> polygon


def _orthogonal_cycle(p: np.ndarray, tol: float) -> Optional[list]:
    """Recover the edge cycle of an axis-aligned polygon from its vertex set.

    On every horizontal (vertical) line the vertices pair up consecutively
    in sorted order; the alternating walk through those pairs is the
    boundary. Returns ``None`` when the set admits no single cycle.
    """
    n = p.shape[0]
    if n < 4 or n % 2:
        return None
    partner = []
    for axis in (1, 0):
        other = 1 - axis
        order = np.argsort(p[:, axis], kind="stable")
        groups, cur = [], [order[0]]
        for a, b in zip(order[:-1], order[1:]):
            if p[b, axis] - p[a, axis] <= tol:
                cur.append(b)
            else:
                groups.append(cur)
                cur = [b]
        groups.append(cur)
        link = np.full(n, -1)
        for grp in groups:
            if len(grp) % 2:
                return None
            grp = sorted(grp, key=lambda k: p[k, other])
            for a, b in zip(grp[0::2], grp[1::2]):
                link[a], link[b] = b, a
        partner.append(link)
    cycle = [0]
    use = 0
    while True:
        nxt = int(partner[use][cycle[-1]])
        use = 1 - use
        if nxt == 0:
            break
        if nxt in cycle:
            return None
        cycle.append(nxt)
    return cycle if len(cycle) == n else None


def polygon_from_corners(corners: CornerSet, g: ImageGeometry) -> LayoutPolygon:
    """Floor polygon and ceiling height implied by an annotated corner set.

    Corners are listed by longitude, which differs from the wall order when
    some corners are hidden. For Manhattan rooms the wall order is recovered
    from the vertex set itself; otherwise longitude order is used.
    """
    if len(corners) < 3:
        raise DomainError("need at least three corners")
    w = floor_distance(corners.v_floor, g)
    lon = ((corners.u + 0.5) / g.width - 0.5) * 2.0 * np.pi
    p = np.column_stack([w * np.sin(lon), w * np.cos(lon)])
    lat_c = v_to_lat(corners.v_ceiling, g)
    if np.any(lat_c <= EPS_LAT):
        raise InvalidBoundaryError("ceiling corner at or below the horizon")
    ceiling_y = float(np.mean(w * np.tan(lat_c)))

    cycle = None
    if len(corners) >= 4 and len(corners) % 2 == 0:
        d = np.diff(np.vstack([p, p[:1]]), axis=0)
        ang = np.mod(np.arctan2(d[:, 1], d[:, 0]), np.pi / 2)
        # the dominant direction is the one most consecutive pairs agree on
        diff = np.abs(ang[:, None] - ang[None, :])
        diff = np.minimum(diff, np.pi / 2 - diff)
        theta = ang[np.argmax(np.sum(diff < 1e-3, axis=1))]
        c, s = np.cos(theta), np.sin(theta)
        rot = p @ np.array([[c, -s], [s, c]])
        tol = 1e-3 * float(np.ptp(rot, axis=0).max())
        cycle = _orthogonal_cycle(rot, tol)
    if cycle is None:
        verts = p[::-1]
    else:
        verts = p[cycle]
    layout = LayoutPolygon(verts, -g.camera_height, ceiling_y)
    return layout


# ---------------------------------------------------------------------------
# corner peaks


def corners_from_probabilities(p, min_distance: int = 5, threshold: float = 0.5) -> list:
    """Greedy circular non-maximum suppression over a per-column corner score."""
    p = np.asarray(p, dtype=float)
    n = p.size
    is_peak = (p >= np.roll(p, 1)) & (p >= np.roll(p, -1)) & (p >= threshold)
    cand = np.nonzero(is_peak)[0]
    cand = cand[np.argsort(-p[cand], kind="stable")]
    kept: list = []
    for c in cand:
        close = False
        for k in kept:
            d = abs(int(c) - k)
            if min(d, n - d) <= min_distance:
                close = True
                break
        if not close:
            kept.append(int(c))
    return sorted(kept)


# ---------------------------------------------------------------------------
# synthetic rooms


def _room_outline(rng, shape: str, lo: float, hi: float) -> np.ndarray:
    W, D = rng.uniform(lo, hi, size=2)
    if shape == "cuboid":
        return np.array([[0, 0], [W, 0], [W, D], [0, D]], dtype=float)
    if shape == "L":
        cw = rng.uniform(0.4, 0.6) * W
        cd = rng.uniform(0.4, 0.6) * D
        base = np.array(
            [[0, 0], [W, 0], [W, D - cd], [W - cw, D - cd], [W - cw, D], [0, D]], dtype=float
        )
    elif shape == "T":
        bar = rng.uniform(0.4, 0.6) * D
        sw = rng.uniform(0.4, 0.6) * W
        x0 = rng.uniform(0.1, 0.9 - sw / W) * W
        base = np.array(
            [
                [x0, 0], [x0 + sw, 0], [x0 + sw, D - bar], [W, D - bar],
                [W, D], [0, D], [0, D - bar], [x0, D - bar],
            ],
            dtype=float,
        )
    else:
        raise DomainError(f"unknown room shape {shape!r}; expected one of {SHAPES}")
    # random quarter turn keeps walls axis-aligned
    k = int(rng.integers(4))
    for _ in range(k):
        base = np.column_stack([-base[:, 1], base[:, 0]])
    return base


def _edge_clearance(pts, verts) -> np.ndarray:
    a = verts
    b = np.roll(verts, -1, axis=0)
    ab = b - a
    ap = pts[:, None, :] - a[None]
    t = np.clip(np.sum(ap * ab, axis=2) / np.sum(ab * ab, axis=1), 0.0, 1.0)
    d = ap - t[..., None] * ab
    return np.min(np.hypot(d[..., 0], d[..., 1]), axis=1)


def generate_synthetic_room(
    seed: int,
    shape: str = "cuboid",
    side_range: Sequence[float] = (2.0, 8.0),
    height_range: Sequence[float] = (2.4, 3.2),
    camera_height: float = 1.6,
    margin: float = 0.35,
) -> LayoutPolygon:
    """Random Manhattan room with the camera placed inside it.

    The camera is drawn uniformly from the part of the floor at least
    ``margin`` away from every wall; the returned polygon is expressed in
    the camera frame.
    """
    lo, hi = map(float, side_range)
    hlo, hhi = map(float, height_range)
    if not (0 < lo <= hi) or not (0 < hlo <= hhi):
        raise DomainError("size ranges must be positive and ordered")
    if hlo <= camera_height:
        raise DomainError("room height must exceed the camera height")
    # narrowest arm of an L or T room is 0.4 of the smallest side
    if margin < 0 or 2 * margin >= 0.4 * lo:
        raise DomainError("camera margin does not fit the smallest room")
    if shape not in SHAPES:
        raise DomainError(f"unknown room shape {shape!r}; expected one of {SHAPES}")
    rng = np.random.default_rng(seed)
    outline = _room_outline(rng, shape, lo, hi)
    height = rng.uniform(hlo, hhi)
    mins, maxs = outline.min(axis=0), outline.max(axis=0)
    for _ in range(1000):
        cand = rng.uniform(mins, maxs, size=(64, 2))
        ok = kernels.points_in_polygon(cand, outline)
        ok &= _edge_clearance(cand, outline) >= margin
        if ok.any():
            cam = cand[np.argmax(ok)]
            break
    else:  # pragma: no cover - unreachable for validated ranges
        raise DomainError("could not place the camera")
    return LayoutPolygon(outline - cam, -camera_height, height - camera_height)
