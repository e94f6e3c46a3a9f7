"""Training losses for boundary-based layout estimation, with analytic gradients.

All gradients are with respect to the *predicted* quantities only: boundary
rows for the boundary and IoU terms, per-column probabilities for the
corner term and student features for the distillation term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, InvalidBoundaryError
from .geometry import EPS_LAT, ImageGeometry, v_to_lat
from .layout import BoundaryAnnotation, OcclusionMask


@dataclass(frozen=True)
class LossConfig:
    occlusion_weight: float = 5.0
    occlusion_threshold: float = 5.0
    num_columns: int = 256
    corner_smoothing_base: float = 0.96
    prob_clamp: float = 1e-7

    def __post_init__(self):
        if self.occlusion_weight < 1:
            raise DomainError("occlusion_weight must be >= 1")
        if not self.occlusion_threshold > 0:
            raise DomainError("occlusion_threshold must be positive")


@dataclass(frozen=True)
class ColumnSection:
    """Per-column wall height ``h`` and horizontal wall distance ``w``."""

    h: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if h.shape != w.shape:
            raise DomainError("h and w must have the same shape")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(w))):
            raise DomainError("sections must be finite")
        if np.any(h <= 0) or np.any(w <= 0):
            raise DomainError("sections must have positive height and distance")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "w", w)

    def __len__(self):
        return self.h.shape[-1]


@dataclass(frozen=True)
class CrossSectionVolumes:
    V: float
    V_hat: float
    V_int: float
    V_uni: float
    iou: float


@dataclass
class LossBreakdown:
    l_b: float
    l_c: float
    l_iou: float
    l_soft: Optional[float]
    l_t: float
    l_s: Optional[float]
    mode: str = "teacher"
    weight: float = 1.0
    grad_pred: Optional[np.ndarray] = None
    grad_prob: Optional[np.ndarray] = None
    grad_features: Optional[np.ndarray] = None

    @property
    def total(self) -> float:
        return self.l_s if self.mode == "student" else self.l_t

    def to_dict(self) -> dict:
        def norm(g):
            return None if g is None else float(np.linalg.norm(g))

        return {
            "mode": self.mode,
            "boundary_weight": self.weight,
            "L_b": self.l_b,
            "L_c": self.l_c,
            "L_IoU": self.l_iou,
            "L_soft": self.l_soft,
            "L_T": self.l_t,
            "L_S": self.l_s,
            "grad_norms": {
                "pred_rows": norm(self.grad_pred),
                "corner_prob": norm(self.grad_prob),
                "features": norm(self.grad_features),
            },
        }


# ---------------------------------------------------------------------------
# boundary L1


def _column_weights(mask, n: int, cfg: LossConfig) -> np.ndarray:
    if mask is None:
        return np.ones(n)
    cols = mask.columns if isinstance(mask, OcclusionMask) else mask
    cols = np.asarray(cols, dtype=bool)
    if cols.shape != (n,):
        raise DomainError(f"occlusion mask has {cols.size} columns, expected {n}")
    return np.where(cols, cfg.occlusion_weight, 1.0)


def boundary_l1(gt: BoundaryAnnotation, pred: BoundaryAnnotation, mask=None,
                cfg: LossConfig = LossConfig(), weights=None):
    """Mean absolute row error over both boundaries.

    Columns flagged in ``mask`` count ``cfg.occlusion_weight`` times.
    ``weights`` (per column) overrides the mask entirely, which lets a
    caller drop columns by giving them zero weight.
    Returns ``(loss, grad)`` with ``grad`` shaped ``(2, num_columns)``.
    """
    if gt.num_columns != pred.num_columns:
        raise DomainError("gt and pred have different column counts")
    n = gt.num_columns
    wcol = _column_weights(mask, n, cfg) if weights is None else np.asarray(weights, float)
    diff = pred.rows() - gt.rows()
    loss = math.fsum(np.ravel(wcol * np.abs(diff))) / (2 * n)
    grad = np.sign(diff) * wcol / (2 * n)
    return loss, grad


# ---------------------------------------------------------------------------
# corner BCE


def corner_targets(gt_corners, num_columns: int, base: float = 0.96) -> np.ndarray:
    """Soft corner heat map ``base ** d`` with ``d`` the circular column distance."""
    idx = np.asarray(gt_corners, dtype=float).reshape(-1)
    if idx.size == 0:
        raise DomainError("at least one ground-truth corner is required")
    cols = np.arange(num_columns, dtype=float)
    d = np.abs(cols[:, None] - idx[None, :])
    d = np.min(np.minimum(d, num_columns - d), axis=1)
    return np.power(base, d)


def corner_bce(gt_corners, pred_prob, cfg: LossConfig = LossConfig()):
    """Binary cross-entropy between predicted corner probabilities and soft targets."""
    p_raw = np.asarray(pred_prob, dtype=float)
    n = p_raw.size
    t = corner_targets(gt_corners, n, cfg.corner_smoothing_base)
    eps = cfg.prob_clamp
    p = np.clip(p_raw, eps, 1.0 - eps)
    loss = float(-np.mean(t * np.log(p) + (1.0 - t) * np.log1p(-p)))
    grad = (p - t) / (p * (1.0 - p)) / n
    # the clamp is flat outside its range
    grad = np.where((p_raw < eps) | (p_raw > 1.0 - eps), 0.0, grad)
    return loss, grad


# ---------------------------------------------------------------------------
# cross-section IoU


def cross_section_volumes(gt: ColumnSection, pred: ColumnSection) -> CrossSectionVolumes:
    if gt.h.shape != pred.h.shape:
        raise DomainError("gt and pred must have the same number of columns")
    V = math.fsum(gt.h * gt.w)
    V_hat = math.fsum(pred.h * pred.w)
    V_int = math.fsum(np.minimum(gt.h, pred.h) * np.minimum(gt.w, pred.w))
    V_uni = V + V_hat - V_int
    return CrossSectionVolumes(V, V_hat, V_int, V_uni, V_int / V_uni)


def _sections_from_rows(rows, g: ImageGeometry):
    """Wall distance, full wall height and their row derivatives.

    ``rows`` has shape ``(..., 2, N)`` (ceiling, floor).
    """
    c = g.camera_height
    lat_c = v_to_lat(rows[..., 0, :], g)
    lat_f = v_to_lat(rows[..., 1, :], g)
    if np.any(~(lat_f < -EPS_LAT)) or np.any(~(lat_c > EPS_LAT)):
        raise InvalidBoundaryError("boundary rows on the wrong side of the horizon")
    a = -lat_f
    tan_c = np.tan(lat_c)
    w = c / np.tan(a)
    h = c + w * tan_c
    k = np.pi / g.height
    dw_dvf = -c * k / np.sin(a) ** 2
    dh_dvc = -w * k / np.cos(lat_c) ** 2
    dh_dvf = tan_c * dw_dvf
    return w, h, dw_dvf, dh_dvc, dh_dvf


def sections_from_annotation(a: BoundaryAnnotation) -> ColumnSection:
    w, h, *_ = _sections_from_rows(a.rows(), a.geometry)
    return ColumnSection(h, w)


def iou_loss_rows(gt_rows, pred_rows, g: ImageGeometry):
    """Value of ``1 - IoU`` for raw row arrays; broadcasts over leading axes."""
    gw, gh, *_ = _sections_from_rows(np.asarray(gt_rows, float), g)
    pw, ph, *_ = _sections_from_rows(np.asarray(pred_rows, float), g)
    V = np.sum(gh * gw, axis=-1)
    V_hat = np.sum(ph * pw, axis=-1)
    I = np.sum(np.minimum(gh, ph) * np.minimum(gw, pw), axis=-1)
    return 1.0 - I / (V + V_hat - I)


def iou_loss(gt: BoundaryAnnotation, pred: BoundaryAnnotation, g: Optional[ImageGeometry] = None):
    """Cross-section 3D IoU loss ``1 - V_int / V_uni`` and its row gradient.

    Where a predicted section equals the target exactly, ``min`` has a kink;
    the gradient there is the smallest-magnitude one-sided value, or zero
    when the two sides disagree in sign, so it vanishes at the optimum.
    """
    if gt.num_columns != pred.num_columns:
        raise DomainError("gt and pred have different column counts")
    g = g or pred.geometry
    gw, gh, *_ = _sections_from_rows(gt.rows(), g)
    pw, ph, dw_dvf, dh_dvc, dh_dvf = _sections_from_rows(pred.rows(), g)

    mh = np.minimum(ph, gh)
    mw = np.minimum(pw, gw)
    # exactly rounded sums keep the loss independent of column order
    V = math.fsum(gh * gw)
    V_hat = math.fsum(ph * pw)
    I = math.fsum(mh * mw)
    U = V + V_hat - I
    loss = 1.0 - I / U

    # d(1 - I/U) with U = V + V_hat - I, for a given dI/d(pred)
    def d_loss(dI, other):
        return -(dI * (U + I) - I * other) / U**2

    def one_sided(p, q, m_other, other):
        below = d_loss(m_other, other)
        above = d_loss(0.0, other)
        d = np.where(p < q, below, above)
        # at a tie take the smallest-magnitude value of the subgradient interval
        lo, hi = np.minimum(below, above), np.maximum(below, above)
        tie = np.where((lo <= 0) & (hi >= 0), 0.0, np.where(lo > 0, lo, hi))
        return np.where(p == q, tie, d)

    dL_dh = one_sided(ph, gh, mw, pw)
    dL_dw = one_sided(pw, gw, mh, ph)
    grad = np.stack([dL_dh * dh_dvc, dL_dh * dh_dvf + dL_dw * dw_dvf])
    return float(loss), grad


# ---------------------------------------------------------------------------
# distillation


def soft_target_l1(teacher_features, student_features):
    t = np.asarray(teacher_features, dtype=float)
    s = np.asarray(student_features, dtype=float)
    if t.shape != s.shape:
        raise DomainError(f"feature shapes differ: {t.shape} vs {s.shape}")
    d = s - t
    return float(np.mean(np.abs(d))), np.sign(d) / d.size


def total_loss(l_b, l_c, l_iou, mode="teacher", l_soft=None, weight=1.0,
               grad_b=None, grad_c=None, grad_iou=None, grad_soft=None) -> LossBreakdown:
    """Compose the teacher or student objective from its parts.

    ``weight`` multiplies the boundary term as a whole; per-column occlusion
    weighting, if any, is already folded into ``l_b`` by :func:`boundary_l1`.
    """
    if mode not in ("teacher", "student"):
        raise DomainError(f"mode must be 'teacher' or 'student', got {mode!r}")
    if mode == "teacher" and l_soft is not None:
        raise DomainError("the teacher objective has no soft-target term")
    if mode == "student" and l_soft is None:
        raise DomainError("the student objective needs the soft-target term")
    l_t = weight * l_b + l_c + l_iou
    l_s = l_t + l_soft if mode == "student" else None
    grad_pred = None
    if grad_b is not None or grad_iou is not None:
        grad_pred = 0.0
        if grad_b is not None:
            grad_pred = grad_pred + weight * np.asarray(grad_b)
        if grad_iou is not None:
            grad_pred = grad_pred + np.asarray(grad_iou)
    return LossBreakdown(
        l_b=float(l_b), l_c=float(l_c), l_iou=float(l_iou),
        l_soft=None if l_soft is None else float(l_soft),
        l_t=float(l_t), l_s=None if l_s is None else float(l_s),
        mode=mode, weight=float(weight), grad_pred=grad_pred,
        grad_prob=grad_c, grad_features=grad_soft if mode == "student" else None,
    )


def compute_losses(gt: BoundaryAnnotation, pred: BoundaryAnnotation, gt_corner_columns,
                   pred_prob, mask=None, cfg: LossConfig = LossConfig(), mode="teacher",
                   teacher_features=None, student_features=None) -> LossBreakdown:
    """Evaluate every term for one sample and compose them."""
    l_b, g_b = boundary_l1(gt, pred, mask, cfg)
    l_c, g_c = corner_bce(gt_corner_columns, pred_prob, cfg)
    l_iou, g_iou = iou_loss(gt, pred)
    l_soft = g_soft = None
    if mode == "student":
        if teacher_features is None or student_features is None:
            raise DomainError("student mode needs teacher and student features")
        l_soft, g_soft = soft_target_l1(teacher_features, student_features)
    return total_loss(l_b, l_c, l_iou, mode, l_soft, 1.0, g_b, g_c, g_iou, g_soft)
