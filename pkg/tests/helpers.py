"""Finite-difference oracles and shared fixtures for the loss tests."""

import numpy as np

from panolayout.geometry import ImageGeometry
from panolayout.layout import BoundaryAnnotation, generate_synthetic_room, polygon_to_boundaries
from panolayout.losses import boundary_l1, corner_bce, iou_loss_rows, soft_target_l1

G = ImageGeometry()


def rel_err(a, b):
    a, b = np.ravel(a), np.ravel(b)
    scale = max(np.linalg.norm(a), np.linalg.norm(b), 1e-300)
    return float(np.linalg.norm(a - b) / scale)


def central_diff(f, x, h):
    """Central differences of scalar ``f`` at every entry of ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in np.ndindex(x.shape):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        out[i] = (f(xp) - f(xm)) / (2 * h)
    return out


def iou_fd(gt_rows, pred_rows, h=1e-5):
    """Batched central differences of ``1 - IoU`` over every predicted row."""
    n = pred_rows.size
    eye = np.eye(n).reshape(n, *pred_rows.shape) * h
    lp = iou_loss_rows(gt_rows, pred_rows[None] + eye, G)
    lm = iou_loss_rows(gt_rows, pred_rows[None] - eye, G)
    return ((lp - lm) / (2 * h)).reshape(pred_rows.shape)


def l1_fd(gt, pred_rows, weights, h=1e-5):
    def f(r):
        return boundary_l1(gt, BoundaryAnnotation(G, r[0], r[1]), weights=weights)[0]

    return central_diff(f, pred_rows, h)


def bce_fd(corners, p, h=1e-6):
    return central_diff(lambda q: corner_bce(corners, q)[0], p, h)


def soft_fd(t, s, h=1e-6):
    return central_diff(lambda q: soft_target_l1(t, q)[0], s, h)


def perturbed_pair(seed, shape, n=256, noise=10.0):
    """Rendered gt plus a uniformly perturbed prediction that stays valid."""
    room = generate_synthetic_room(seed, shape)
    gt = polygon_to_boundaries(room, G, n)
    rng = np.random.default_rng(seed)
    rows = gt.rows() + rng.uniform(-noise, noise, size=(2, n))
    horizon = G.horizon_row
    rows[0] = np.minimum(rows[0], horizon - 1.0)
    rows[1] = np.maximum(rows[1], horizon + 1.0)
    return room, gt, BoundaryAnnotation(G, rows[0], rows[1])


# acceptance criteria report, printed by the terminal-summary hook in conftest
ACCEPTANCE = {}


class criterion:
    """Context manager recording PASS or FAIL for one acceptance criterion."""

    def __init__(self, number, title):
        self.number, self.title = number, title
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        note = self.detail if exc_type is None else f"{exc_type.__name__}: {exc}".splitlines()[0]
        ACCEPTANCE[self.number] = f"[{status}] criterion {self.number:2d} {self.title}" + (
            f" ({note})" if note else "")
        print(ACCEPTANCE[self.number])
        return False
