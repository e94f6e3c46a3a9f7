import json

import numpy as np
import pytest

from panolayout.errors import DataError
from panolayout.geometry import ImageGeometry
from panolayout.layout import CornerSet, generate_synthetic_room, polygon_to_corners
from panolayout.layout_io import (
    dumps_layout,
    layout_from_dict,
    layout_to_dict,
    parse_corner_text,
    read_layout,
    write_layout,
)

G = ImageGeometry()


def test_json_round_trip_is_exact(tmp_path):
    cs = polygon_to_corners(generate_synthetic_room(4, "T"), G)
    path = tmp_path / "room.json"
    write_layout(path, cs, G)
    back, g = read_layout(path)
    assert g == G
    assert np.array_equal(back.corners, cs.corners)
    d = json.loads(path.read_text())
    assert list(d) == ["image_width", "image_height", "camera_height", "corners"]


def test_dumps_is_deterministic():
    cs = polygon_to_corners(generate_synthetic_room(5, "L"), G)
    assert dumps_layout(cs, G) == dumps_layout(cs, G)
    assert layout_from_dict(layout_to_dict(cs, G))[0].corners.tolist() == cs.corners.tolist()


def test_corner_text_format(tmp_path):
    text = "100 120\n100 380\n300.5 130\n301.5 370\n"
    cs, g = parse_corner_text(text)
    assert cs.corners.tolist() == [[100, 120, 380], [301, 130, 370]]
    path = tmp_path / "c.txt"
    path.write_text(text)
    assert read_layout(path)[0].corners.tolist() == cs.corners.tolist()


@pytest.mark.parametrize(
    "record",
    [
        {"image_width": 1024, "image_height": 512, "corners": []},
        {"image_width": 1024, "image_height": 512, "camera_height": 1.6, "corners": [[1, 2]]},
        {"image_width": "x", "image_height": 512, "camera_height": 1.6, "corners": []},
        {"image_width": 1024, "image_height": 512, "camera_height": 1.6,
         "corners": [[5, 100, 400], [1, 100, 400]]},
    ],
)
def test_malformed_records(record):
    with pytest.raises(DataError):
        layout_from_dict(record)


def test_bad_files(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(DataError):
        read_layout(p)
    p.write_text("1 2 3")
    with pytest.raises(DataError):
        read_layout(p)


def test_corner_set_type():
    cs, _ = parse_corner_text("1 100\n1 400\n2 100\n2 400")
    assert isinstance(cs, CornerSet) and len(cs) == 2
