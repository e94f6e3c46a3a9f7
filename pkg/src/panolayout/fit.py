"""Gradient-descent fitting of boundary rows under the composed layout loss."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, InvalidBoundaryError, NumericError
from .geometry import EPS_LAT, lat_to_v, v_to_lat
from .layout import BoundaryAnnotation, boundary_polygon
from .losses import LossConfig, _column_weights, boundary_l1, iou_loss
from .metrics import iou_3d

OBJECTIVES = {"iou": (0.0, 1.0), "l1": (1.0, 0.0), "both": (1.0, 1.0)}


@dataclass(frozen=True)
class FitConfig:
    """Optimiser settings.

    ``learning_rate`` is the largest per-column latitude change (radians)
    a step may make; backtracking halves it until the loss decreases.
    """

    learning_rate: float = 0.01
    max_iters: int = 500
    weight_boundary: float = 0.0
    weight_iou: float = 1.0
    convergence_tol: float = 1e-7
    max_halvings: int = 40
    patience: int = 10
    loss: LossConfig = LossConfig()

    def __post_init__(self):
        if not self.learning_rate > 0 or self.max_iters < 1:
            raise DomainError("learning_rate must be positive and max_iters >= 1")
        if self.weight_boundary < 0 or self.weight_iou < 0:
            raise DomainError("objective weights must be non-negative")

    @classmethod
    def for_objective(cls, name: str, **kw) -> "FitConfig":
        try:
            wb, wi = OBJECTIVES[name]
        except KeyError:
            raise DomainError(f"objective must be one of {sorted(OBJECTIVES)}") from None
        return cls(weight_boundary=wb, weight_iou=wi, **kw)


@dataclass
class FitTrace:
    losses: list
    final: BoundaryAnnotation
    final_loss: float
    iterations: int
    converged: bool
    iou3d: Optional[float] = None

    def to_dict(self) -> dict:
        g = self.final.geometry
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "final_loss": self.final_loss,
            "iou3d": self.iou3d,
            "losses": [float(x) for x in self.losses],
            "image_width": g.width,
            "image_height": g.height,
            "camera_height": g.camera_height,
            "v_ceiling": [float(x) for x in self.final.v_ceiling],
            "v_floor": [float(x) for x in self.final.v_floor],
        }


class _Objective:
    def __init__(self, target: BoundaryAnnotation, weights: np.ndarray, cfg: FitConfig):
        self.target = target
        self.g = target.geometry
        self.weights = weights
        self.cfg = cfg

    def valid(self, lat) -> bool:
        return bool(np.all(lat[0] > EPS_LAT) and np.all(lat[1] < -EPS_LAT)
                    and np.all(np.abs(lat) < np.pi / 2 - 1e-6))

    def annotation(self, lat) -> BoundaryAnnotation:
        rows = lat_to_v(lat, self.g)
        return BoundaryAnnotation(self.g, rows[0], rows[1])

    def __call__(self, lat, with_grad=True):
        a = self.annotation(lat)
        value = 0.0
        grad = np.zeros_like(lat)
        if self.cfg.weight_boundary:
            lb, gb = boundary_l1(self.target, a, weights=self.weights)
            value += self.cfg.weight_boundary * lb
            grad += self.cfg.weight_boundary * gb
        if self.cfg.weight_iou:
            li, gi = iou_loss(self.target, a)
            value += self.cfg.weight_iou * li
            grad += self.cfg.weight_iou * gi
        # rows -> latitude
        grad *= -self.g.height / np.pi
        return value, grad


def fit_layout(init: BoundaryAnnotation, target: BoundaryAnnotation, mask=None,
               cfg: FitConfig = FitConfig(), column_weights=None) -> FitTrace:
    """Fit ``init``'s rows to ``target`` by backtracking gradient descent.

    Columns flagged in ``mask`` get the occlusion weight in the boundary
    term; ``column_weights`` replaces that weighting outright (zero drops
    a column from the boundary term). Optimisation runs in latitude space.
    """
    if init.geometry != target.geometry or init.num_columns != target.num_columns:
        raise DomainError("init and target must share geometry and column count")
    n = target.num_columns
    if column_weights is None:
        weights = _column_weights(mask, n, cfg.loss)
    else:
        weights = np.asarray(column_weights, dtype=float)
        if weights.shape != (n,):
            raise DomainError("column_weights must have one entry per column")
    obj = _Objective(target, weights, cfg)
    lat = v_to_lat(init.rows(), init.geometry)
    loss, grad = obj(lat)
    losses = []
    converged = False
    stalls = 0
    step_scale = 1.0
    # per-coordinate scale, halved whenever that coordinate's gradient flips sign
    coord_scale = np.ones_like(lat)
    it = 0
    for it in range(cfg.max_iters):
        losses.append(loss)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise NumericError("objective became non-finite",
                               trace=FitTrace(losses, obj.annotation(lat), loss, it, False))
        gmax = np.max(np.abs(grad))
        if loss == 0.0 or gmax == 0.0:
            converged = True
            break
        step_scale = min(1.0, 2.0 * step_scale)
        direction = coord_scale * grad / gmax
        accepted = False
        for _ in range(cfg.max_halvings):
            cand = lat - cfg.learning_rate * step_scale * direction
            if obj.valid(cand):
                try:
                    new_loss, new_grad = obj(cand)
                except InvalidBoundaryError:
                    new_loss = np.inf
                if new_loss < loss:
                    accepted = True
                    break
            step_scale *= 0.5
        if not accepted:
            converged = True
            break
        flipped = np.sign(new_grad) * np.sign(grad) < 0
        coord_scale = np.where(flipped, 0.5 * coord_scale, np.minimum(1.0, 1.2 * coord_scale))
        delta = loss - new_loss
        lat, loss, grad = cand, new_loss, new_grad
        stalls = stalls + 1 if delta < cfg.convergence_tol else 0
        if stalls >= cfg.patience:
            converged = True
            it += 1
            break
    else:
        it = cfg.max_iters
    final = obj.annotation(lat)
    trace = FitTrace(losses, final, float(loss), it, converged)
    trace.iou3d = iou_3d(boundary_polygon(final), boundary_polygon(target))
    return trace
