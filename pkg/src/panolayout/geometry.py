"""Equirectangular image <-> spherical <-> camera-centred 3D conversions.

Conventions used throughout the package:

* pixel centres sit at integer coordinates, so column ``u`` covers
  ``[u - 0.5, u + 0.5)`` and the continuous longitude uses ``u + 0.5``;
* longitude 0 looks along ``+z``, longitude ``+pi/2`` along ``+x``;
* ``y`` is vertical (up positive) and the camera sits at the origin, so
  the floor is the plane ``y = -camera_height``.

Every function accepts scalars or numpy arrays and broadcasts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InvalidBoundaryError

#: Guard band (radians) around the horizon where ``tan`` blows up.
EPS_LAT = 1e-6


@dataclass(frozen=True)
class ImageGeometry:
    width: int = 1024
    height: int = 512
    camera_height: float = 1.6

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DomainError("image dimensions must be positive")
        if self.width != 2 * self.height:
            raise DomainError(
                f"equirectangular images need width = 2*height, got {self.width}x{self.height}"
            )
        if not self.camera_height > 0:
            raise DomainError("camera_height must be positive")

    @property
    def horizon_row(self) -> float:
        return self.height / 2.0 - 0.5


class LonLat(NamedTuple):
    lon: np.ndarray
    lat: np.ndarray


def _check_range(name, x, size, closed=False):
    # the image spans [-0.5, size - 0.5) around integer pixel centres
    x = np.asarray(x, dtype=float)
    hi = size - 0.5
    above = x > hi if closed else x >= hi
    if np.any(~np.isfinite(x)) or np.any(x < -0.5) or np.any(above):
        raise DomainError(f"{name} must lie in [-0.5, {hi}{']' if closed else ')'}")
    return x


def uv_to_lonlat(u, v, g: ImageGeometry) -> LonLat:
    u = _check_range("u", u, g.width)
    v = _check_range("v", v, g.height, closed=True)
    lon = ((u + 0.5) / g.width - 0.5) * 2.0 * np.pi
    lat = (0.5 - (v + 0.5) / g.height) * np.pi
    return LonLat(lon, lat)


def lat_to_v(lat, g: ImageGeometry):
    return (0.5 - np.asarray(lat, dtype=float) / np.pi) * g.height - 0.5


def v_to_lat(v, g: ImageGeometry):
    """Row to latitude without range checking (used inside optimisers)."""
    return (0.5 - (np.asarray(v, dtype=float) + 0.5) / g.height) * np.pi


def lon_to_u(lon, g: ImageGeometry):
    """Longitude to column, wrapped into ``[0, width)``."""
    u = (np.asarray(lon, dtype=float) / (2.0 * np.pi) + 0.5) * g.width - 0.5
    return np.mod(u, g.width)


def column_longitudes(num_columns: int) -> np.ndarray:
    """Longitudes of the centres of ``num_columns`` equal column bins."""
    return ((np.arange(num_columns) + 0.5) / num_columns - 0.5) * 2.0 * np.pi


def column_u(num_columns: int, g: ImageGeometry) -> np.ndarray:
    """Pixel-column coordinate of each column bin centre."""
    return (np.arange(num_columns) + 0.5) * (g.width / num_columns) - 0.5


def direction(lon, lat) -> np.ndarray:
    """Unit viewing direction(s), shape ``(..., 3)``."""
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    c = np.cos(lat)
    return np.stack([c * np.sin(lon), np.sin(lat), c * np.cos(lon)], axis=-1)


def floor_point(u, v_floor, g: ImageGeometry) -> np.ndarray:
    """Intersect the ray through ``(u, v_floor)`` with the floor plane."""
    lon, lat = uv_to_lonlat(u, v_floor, g)
    if np.any(lat >= -EPS_LAT):
        raise InvalidBoundaryError("floor boundary at or above the horizon")
    w = g.camera_height / np.tan(-lat)
    y = np.full_like(w, -g.camera_height)
    return np.stack([w * np.sin(lon), y, w * np.cos(lon)], axis=-1)


def floor_distance(v_floor, g: ImageGeometry):
    """Horizontal distance to the wall implied by a floor boundary row."""
    lat = v_to_lat(v_floor, g)
    if np.any(~(lat < -EPS_LAT)):
        raise InvalidBoundaryError("floor boundary at or above the horizon")
    return g.camera_height / np.tan(-lat)


def ceiling_height_at(u, v_ceil, wall_distance, g: ImageGeometry):
    """Height of the ceiling above the camera at a known wall distance."""
    _, lat = uv_to_lonlat(u, v_ceil, g)
    wall_distance = np.asarray(wall_distance, dtype=float)
    if np.any(lat <= EPS_LAT):
        raise InvalidBoundaryError("ceiling boundary at or below the horizon")
    if np.any(~(wall_distance > 0)):
        raise DomainError("wall_distance must be positive")
    return wall_distance * np.tan(lat)


def project_point(p, g: ImageGeometry):
    """Project camera-frame point(s) to fractional ``(u, v)`` pixels."""
    p = np.asarray(p, dtype=float)
    x, y, z = p[..., 0], p[..., 1], p[..., 2]
    r = np.hypot(x, z)
    if np.any(np.hypot(r, y) == 0):
        raise DomainError("cannot project the camera centre")
    lon = np.arctan2(x, z)
    lat = np.arctan2(y, r)
    return lon_to_u(lon, g), lat_to_v(lat, g)
