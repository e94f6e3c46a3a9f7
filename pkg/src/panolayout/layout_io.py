"""Reading and writing layout annotations.

Two input formats are accepted:

* JSON ``{"image_width", "image_height", "camera_height", "corners"}`` where
  ``corners`` is a list of ``[u, v_ceiling, v_floor]`` ordered by ``u``;
* a whitespace-separated corner list with one ``u v`` pair per line,
  alternating ceiling and floor corners.

Only JSON is ever written.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataError, DomainError
from .geometry import ImageGeometry
from .layout import CornerSet


def layout_to_dict(corners: CornerSet, g: ImageGeometry) -> dict:
    return {
        "image_width": int(g.width),
        "image_height": int(g.height),
        "camera_height": float(g.camera_height),
        "corners": [[float(u), float(vc), float(vf)] for u, vc, vf in corners.corners],
    }


def dumps_layout(corners: CornerSet, g: ImageGeometry) -> str:
    return json.dumps(layout_to_dict(corners, g), indent=1) + "\n"


def write_layout(path, corners: CornerSet, g: ImageGeometry) -> None:
    Path(path).write_text(dumps_layout(corners, g))


def layout_from_dict(d: dict):
    try:
        g = ImageGeometry(int(d["image_width"]), int(d["image_height"]), float(d["camera_height"]))
        c = np.asarray(d["corners"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed layout record: {exc}") from exc
    if c.ndim != 2 or c.shape[1] != 3:
        raise DataError("corners must be a list of [u, v_ceiling, v_floor] triples")
    try:
        return CornerSet(c), g
    except DomainError as exc:
        raise DataError(str(exc)) from exc


def parse_corner_text(text: str, g: ImageGeometry = ImageGeometry()):
    """Parse alternating ceiling/floor ``u v`` lines into a corner set."""
    vals = np.array([float(t) for t in text.split()], dtype=float)
    if vals.size % 4:
        raise DataError("corner list must hold ceiling/floor pairs of 'u v' values")
    pairs = vals.reshape(-1, 2, 2)
    u = pairs[:, :, 0].mean(axis=1)
    corners = np.column_stack([u, pairs[:, 0, 1], pairs[:, 1, 1]])
    return CornerSet.from_unsorted(corners), g


def read_layout(path, g: ImageGeometry = ImageGeometry()):
    """Load ``(CornerSet, ImageGeometry)`` from a JSON or corner-list file."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            return layout_from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from exc
    return parse_corner_text(text, g)
