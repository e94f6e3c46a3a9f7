import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import G, bce_fd, iou_fd, l1_fd, perturbed_pair, rel_err, soft_fd
from panolayout.errors import DomainError, InvalidBoundaryError
from panolayout.geometry import lat_to_v, v_to_lat
from panolayout.layout import BoundaryAnnotation, OcclusionMask, SHAPES
from panolayout.losses import (
    ColumnSection,
    LossConfig,
    boundary_l1,
    compute_losses,
    corner_bce,
    corner_targets,
    cross_section_volumes,
    iou_loss,
    sections_from_annotation,
    soft_target_l1,
    total_loss,
)


def shifted(a, d_ceil=0.0, d_floor=0.0):
    return BoundaryAnnotation(G, a.v_ceiling + d_ceil, a.v_floor + d_floor)


def with_height_scale(gt, k):
    """Prediction whose walls are ``k`` times taller at unchanged distances."""
    s = sections_from_annotation(gt)
    c = G.camera_height
    lat_c = np.arctan((k * s.h - c) / s.w)
    return BoundaryAnnotation(G, lat_to_v(lat_c, G), gt.v_floor)


# ---------------------------------------------------------------- L_b


def test_boundary_l1_values(cuboid_pair):
    _, gt = cuboid_pair
    loss, grad = boundary_l1(gt, gt)
    assert loss == 0 and not grad.any()
    assert boundary_l1(gt, shifted(gt, 3, 3))[0] == pytest.approx(3.0)
    full = np.ones(gt.num_columns, dtype=bool)
    cfg = LossConfig(occlusion_weight=5)
    assert boundary_l1(gt, shifted(gt, 3, 3), full, cfg)[0] == pytest.approx(15.0)
    assert boundary_l1(gt, shifted(gt, 3, 3), OcclusionMask(full), cfg)[0] == pytest.approx(15.0)
    with pytest.raises(DomainError):
        boundary_l1(gt, gt, np.ones(3, dtype=bool))


def test_boundary_l1_weights_override(cuboid_pair):
    _, gt = cuboid_pair
    w = np.zeros(gt.num_columns)
    w[:10] = 2.0
    loss, grad = boundary_l1(gt, shifted(gt, 1, -1), weights=w)
    assert loss == pytest.approx(2.0 * 10 * 2 / (2 * gt.num_columns))
    assert not grad[:, 10:].any()


def test_loss_config_validation():
    with pytest.raises(DomainError):
        LossConfig(occlusion_weight=0.5)
    with pytest.raises(DomainError):
        LossConfig(occlusion_threshold=0)


# ---------------------------------------------------------------- L_c


def test_corner_bce_values():
    p = np.zeros(16)
    p[[3, 9]] = 1.0
    loss, grad = corner_bce([3, 9], p, LossConfig(corner_smoothing_base=0.0))
    assert loss == pytest.approx(-np.log1p(-1e-7), rel=1e-6)
    assert not grad.any()
    loss, _ = corner_bce([0], np.array([0.5]))
    assert loss == pytest.approx(np.log(2))


def test_corner_targets():
    t = corner_targets([10], 64)
    assert t[10] == 1.0 and t[11] == pytest.approx(0.96) and t[9] == pytest.approx(0.96)
    assert t[12] == pytest.approx(0.96**2)
    wrap = corner_targets([0], 64)
    assert wrap[63] == pytest.approx(0.96)
    with pytest.raises(DomainError):
        corner_targets([], 8)


def test_corner_bce_gradient_matches_fd():
    rng = np.random.default_rng(0)
    p = rng.uniform(0.05, 0.95, 64)
    _, grad = corner_bce([5, 30], p)
    assert rel_err(grad, bce_fd([5, 30], p)) < 1e-4


# ---------------------------------------------------------------- volumes and L_IoU


def test_cross_section_volume_arithmetic():
    s = ColumnSection(np.full(256, 3.0), np.full(256, 2.0))
    v = cross_section_volumes(s, s)
    assert (v.V, v.V_hat, v.V_int, v.iou) == (1536.0, 1536.0, 1536.0, 1.0)
    tall = ColumnSection(np.full(256, 6.0), np.full(256, 2.0))
    assert cross_section_volumes(s, tall).iou == pytest.approx(0.5)
    with pytest.raises(DomainError):
        ColumnSection(np.ones(3), -np.ones(3))
    with pytest.raises(DomainError):
        cross_section_volumes(s, ColumnSection(np.ones(3), np.ones(3)))


@given(st.integers(0, 10_000))
def test_cross_section_volumes_symmetric(seed):
    rng = np.random.default_rng(seed)
    a = ColumnSection(rng.uniform(0.5, 3, 32), rng.uniform(0.5, 8, 32))
    b = ColumnSection(rng.uniform(0.5, 3, 32), rng.uniform(0.5, 8, 32))
    x, y = cross_section_volumes(a, b), cross_section_volumes(b, a)
    assert x.V_int == y.V_int and x.V_uni == pytest.approx(y.V_uni) and x.iou == pytest.approx(y.iou)
    assert 0 < x.iou <= 1


def test_iou_loss_identity_has_zero_gradient(cuboid_pair):
    _, gt = cuboid_pair
    loss, grad = iou_loss(gt, gt)
    assert loss == 0.0
    assert not grad.any()


@pytest.mark.parametrize("k", [1.0, 1.5, 2.0, 4.0])
def test_iou_loss_height_scaling_closed_form(cuboid_pair, k):
    _, gt = cuboid_pair
    loss, _ = iou_loss(gt, with_height_scale(gt, k))
    assert loss == pytest.approx(1 - 1 / k, abs=1e-9)


def test_iou_loss_rejects_wrong_side_of_horizon(cuboid_pair):
    _, gt = cuboid_pair
    with pytest.raises(InvalidBoundaryError):
        iou_loss(gt, BoundaryAnnotation(G, gt.v_ceiling, np.full(256, G.horizon_row + 1e-9)))


@pytest.mark.parametrize("seed", range(6))
def test_iou_gradient_matches_fd(seed):
    _, gt, pred = perturbed_pair(seed, SHAPES[seed % 3])
    loss, grad = iou_loss(gt, pred)
    assert 0 < loss < 1
    assert rel_err(grad, iou_fd(gt.rows(), pred.rows())) < 1e-4


def test_iou_gradient_vanishes_at_optimum(cuboid_pair):
    _, gt = cuboid_pair
    _, grad = iou_loss(gt, gt)
    fd = iou_fd(gt.rows(), gt.rows())
    assert np.allclose(fd, 0, atol=1e-9) and not grad.any()
    # the optimum is strict along every coordinate, so both one-sided slopes are positive
    h = 1e-6
    rows = gt.rows()
    for idx in [(0, 0), (1, 17), (0, 200), (1, 255)]:
        for sign in (1, -1):
            r = rows.copy()
            r[idx] += sign * h
            assert iou_loss(gt, BoundaryAnnotation(G, r[0], r[1]))[0] > 0


@pytest.mark.parametrize("seed", range(8))
def test_iou_gradient_is_descent_direction(seed):
    _, gt, pred = perturbed_pair(seed, "cuboid")
    loss, grad = iou_loss(gt, pred)
    step = 1e-3 / np.abs(grad).max()
    rows = pred.rows() - step * grad
    assert iou_loss(gt, BoundaryAnnotation(G, rows[0], rows[1]))[0] < loss


@given(st.integers(0, 1000), st.floats(0.5, 12))
def test_iou_loss_range(seed, noise):
    _, gt, pred = perturbed_pair(seed, SHAPES[seed % 3], n=64, noise=noise)
    loss, grad = iou_loss(gt, pred)
    assert 0 <= loss <= 1 and np.all(np.isfinite(grad))


def test_iou_loss_zero_iff_sections_match(cuboid_pair):
    _, gt = cuboid_pair
    assert iou_loss(gt, shifted(gt, 0.0, 0.0))[0] == 0
    assert iou_loss(gt, shifted(gt, 0.5, 0.0))[0] > 0
    assert iou_loss(gt, shifted(gt, 0.0, 0.5))[0] > 0


# ---------------------------------------------------------------- L_soft and composition


def test_soft_target_values():
    assert soft_target_l1([[1, 2]], [[1, 2]])[0] == 0
    assert soft_target_l1([[1, 2]], [[0, 0]])[0] == pytest.approx(1.5)
    t = np.arange(12.0).reshape(3, 4)
    assert soft_target_l1(t, t - 0.7)[0] == pytest.approx(0.7)
    with pytest.raises(DomainError):
        soft_target_l1(np.ones((2, 2)), np.ones((2, 3)))


def test_soft_target_gradient_matches_fd():
    rng = np.random.default_rng(1)
    t, s = rng.normal(size=(8, 6)), rng.normal(size=(8, 6))
    assert rel_err(soft_target_l1(t, s)[1], soft_fd(t, s)) < 1e-4


def test_boundary_gradient_matches_fd():
    _, gt, pred = perturbed_pair(4, "T")
    w = np.where(np.arange(256) % 7 == 0, 5.0, 1.0)
    _, grad = boundary_l1(gt, pred, weights=w)
    assert rel_err(grad, l1_fd(gt, pred.rows(), w)) < 1e-4


def test_total_loss_composition():
    t = total_loss(1, 2, 3)
    assert t.l_t == 6 and t.total == 6 and t.l_s is None
    s = total_loss(1, 2, 3, "student", 0.5)
    assert s.l_s == 6.5 and s.total == 6.5
    assert total_loss(1, 0, 0, weight=5).l_t == 5
    with pytest.raises(DomainError):
        total_loss(1, 2, 3, "teacher", 0.5)
    with pytest.raises(DomainError):
        total_loss(1, 2, 3, "student")
    with pytest.raises(DomainError):
        total_loss(1, 2, 3, "other")
    assert set(s.to_dict()) >= {"L_b", "L_c", "L_IoU", "L_soft", "L_T", "L_S", "grad_norms"}


@given(st.floats(0, 10), st.floats(0, 10), st.floats(0, 1), st.floats(0, 10), st.floats(1, 5))
def test_total_loss_nonnegative_and_additive(lb, lc, li, ls, lam):
    t = total_loss(lb, lc, li, weight=lam)
    assert t.l_t >= 0
    assert t.l_t == pytest.approx(lam * lb + lc + li)
    s = total_loss(lb, lc, li, "student", ls, weight=lam)
    assert s.l_s == pytest.approx(t.l_t + ls)


def test_compute_losses_identity(cuboid_pair):
    _, gt = cuboid_pair
    cols = [10, 70, 130, 190]
    p = corner_targets(cols, 256, 0.0)
    out = compute_losses(gt, gt, cols, p, cfg=LossConfig(corner_smoothing_base=0.0))
    assert out.l_b == 0 and out.l_iou == 0 and out.l_c < 1e-6
    feats = np.ones((4, 8))
    st_ = compute_losses(gt, gt, cols, p, cfg=LossConfig(corner_smoothing_base=0.0),
                         mode="student", teacher_features=feats, student_features=feats)
    assert st_.l_s == st_.l_t
    with pytest.raises(DomainError):
        compute_losses(gt, gt, cols, p, mode="student")


def test_latitude_row_helpers_consistent():
    v = np.array([10.0, 400.0])
    assert np.allclose(lat_to_v(v_to_lat(v, G), G), v)
