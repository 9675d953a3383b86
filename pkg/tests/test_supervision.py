import math

import numpy as np
import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from posegaze.supervision import (
    LossWeights,
    MetricReport,
    gaussian_gt_heatmap,
    gaze_loss,
    heatmap_loss,
    metric_angle,
    metric_auc,
    metric_dist2d,
    metric_dist3d,
    normalized_to_cell,
    resize_bilinear,
    total_loss,
)

vec3 = arrays(np.float64, 3, elements=st.floats(-10, 10)).filter(lambda v: np.linalg.norm(v) > 1e-3)


def test_gaze_loss_extremes():
    g = torch.tensor([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert gaze_loss(g, g).item() == pytest.approx(0.0)
    assert gaze_loss(g, -g).item() == pytest.approx(2.0)
    assert gaze_loss(g, g.flip(0)).item() == pytest.approx(1.0)


def test_gaze_loss_scale_invariant():
    g = torch.randn(5, 3)
    p = torch.randn(5, 3)
    torch.testing.assert_close(gaze_loss(g, p), gaze_loss(3 * g, 0.5 * p))


@given(vec3, vec3)
def test_gaze_loss_matches_angle_metric(a, b):
    loss = gaze_loss(torch.tensor(a)[None], torch.tensor(b)[None]).item()
    assert loss == pytest.approx(1 - math.cos(math.radians(metric_angle(a, b))), abs=1e-9)


def test_heatmap_loss_is_mse():
    a = torch.rand(2, 4, 4)
    b = torch.rand(2, 4, 4)
    torch.testing.assert_close(heatmap_loss(a, b), torch.nn.functional.mse_loss(a, b))
    with pytest.raises(ValueError):
        heatmap_loss(a, b[:, :3])


def test_total_loss_weights():
    assert total_loss(1.0, 1.0) == 10010.0
    assert total_loss(2.0, 3.0, LossWeights(0.0, 1.0)) == 3.0
    with pytest.raises(ValueError):
        LossWeights(-1.0, 1.0)


def test_gaussian_peak_and_width():
    hm = gaussian_gt_heatmap((10, 20), sigma=3, size=64)
    assert hm.shape == (64, 64)
    assert hm[20, 10] == 1.0 and hm.argmax() == 20 * 64 + 10
    assert hm[20, 13] == pytest.approx(math.exp(-0.5))
    assert hm.min() >= 0


def test_gaussian_clamps_outside_target():
    with pytest.warns(UserWarning):
        hm = gaussian_gt_heatmap((70, -2), size=64)
    assert hm[0, 63] == 1.0


def test_normalized_to_cell():
    assert normalized_to_cell((0.0, 0.0)) == (0, 0)
    assert normalized_to_cell((0.999, 0.5)) == (63, 32)
    assert normalized_to_cell((1.0, 1.0)) == (63, 63)


def test_dist3d_and_angle():
    assert metric_dist3d([0, 0, 0], [3, 4, 0]) == 5.0
    assert metric_angle([1, 0, 0], [0, 1, 0]) == pytest.approx(90.0)
    assert metric_angle([1, 0, 0], [1, 0, 0]) == 0.0
    assert metric_angle([1, 0, 0], [-2, 0, 0]) == pytest.approx(180.0)
    with pytest.raises(ValueError):
        metric_angle([0, 0, 0], [1, 0, 0])


def test_auc_perfect_and_worst():
    hm = np.zeros((8, 8))
    hm[2, 3] = 1.0
    assert metric_auc(hm, (3, 2), (8, 8)) == 1.0
    assert metric_auc(1 - hm, (3, 2), (8, 8)) == 0.0


def test_auc_constant_heatmap_is_half():
    assert metric_auc(np.ones((8, 8)), (1, 1), (16, 16)) == 0.5


@given(arrays(np.float64, (8, 8), elements=st.floats(0, 1)), st.integers(0, 7), st.integers(0, 7))
def test_auc_in_unit_interval(hm, u, v):
    assert 0.0 <= metric_auc(hm, (u, v), (8, 8)) <= 1.0


def test_resize_bilinear_preserves_range():
    img = np.arange(16, dtype=float).reshape(4, 4)
    out = resize_bilinear(img, 8, 12)
    assert out.shape == (8, 12)
    assert out.min() >= img.min() and out.max() <= img.max()
    np.testing.assert_array_equal(resize_bilinear(np.full((3, 3), 2.0), 9, 9), np.full((9, 9), 2.0))


def test_dist2d_uses_cell_centre():
    hm = np.zeros((4, 4))
    hm[1, 2] = 1
    assert metric_dist2d(hm, (0.625, 0.375)) == 0.0
    assert metric_dist2d(hm, (0.625, 0.875)) == pytest.approx(0.5)


def test_report_line_round_trip():
    r = MetricReport(0.284, 15.9, 0.983, 0.083)
    line = r.to_line()
    assert [kv.split("=")[0] for kv in line.split()] == list(MetricReport.FIELDS)
    assert MetricReport.from_line(line) == r
    with pytest.raises(ValueError):
        MetricReport.from_line("dist_3d=1 auc=2")


def test_report_mean():
    m = MetricReport.mean([MetricReport(1, 2, 3, 4), MetricReport(3, 4, 5, 6)])
    assert m == MetricReport(2, 3, 4, 5)
    assert math.isnan(MetricReport.mean([]).auc)
