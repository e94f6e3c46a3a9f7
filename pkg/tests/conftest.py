import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from panolayout.geometry import ImageGeometry
from panolayout.layout import LayoutPolygon, generate_synthetic_room, polygon_to_boundaries

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def g():
    return ImageGeometry()


def square_room(half=2.0, height=2.8, cam=1.6, center=(0.0, 0.0)):
    cx, cz = center
    v = np.array([[-half, -half], [half, -half], [half, half], [-half, half]]) - [cx, cz]
    return LayoutPolygon(v, -cam, height - cam)


def l_room_occluded(cam=1.6):
    # camera in the lower arm, far corner of the upper arm hidden by the reflex corner
    v = np.array([[0, 0], [6, 0], [6, 2], [2, 2], [2, 6], [0, 6]], dtype=float)
    return LayoutPolygon(v - [5.0, 1.0], -cam, 3.0 - cam)


def l_room_clear(cam=1.6):
    # camera next to the reflex corner sees every corner
    v = np.array([[0, 0], [6, 0], [6, 2], [2, 2], [2, 6], [0, 6]], dtype=float)
    return LayoutPolygon(v - [1.0, 1.0], -cam, 3.0 - cam)


@pytest.fixture
def cuboid_pair(g):
    room = generate_synthetic_room(3, "cuboid")
    return room, polygon_to_boundaries(room, g, 256)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
