import numpy as np
import pytest

from conftest import random_boxes
from ggiou.geometry import GGIoUParams, InvalidBoxError, SigmaSource, ggiou, iou
from ggiou.pairwise import (
    EmptyGroundTruthError,
    MetricMatrix,
    argmax_per_anchor,
    argmax_per_gt,
    metric_matrix,
)
from oracles import naive_ggiou, naive_iou

METRICS = ["iou", GGIoUParams(), GGIoUParams(0.5, 0.2, SigmaSource.TRUTH)]


def test_empty_dims():
    assert metric_matrix(np.zeros((0, 4)), [(0, 0, 1, 1)]).values.shape == (1, 0)
    assert metric_matrix([(0, 0, 1, 1)], np.zeros((0, 4))).values.shape == (0, 1)


def test_identical_single():
    m = metric_matrix([(0, 0, 3, 5)], [(0, 0, 3, 5)], GGIoUParams())
    assert m.values.tolist() == [[1.0]]


def test_non_finite_names_index():
    with pytest.raises(InvalidBoxError, match=r"anchors\[1\]"):
        metric_matrix([(0, 0, 1, 1), (0, np.nan, 1, 1)], [(0, 0, 1, 1)])


def test_readonly():
    m = metric_matrix([(0, 0, 1, 1)], [(0, 0, 1, 1)])
    with pytest.raises(ValueError):
        m.values[0, 0] = 0.5


@pytest.mark.parametrize("metric", METRICS, ids=str)
def test_entries_equal_scalar_calls(rng, metric):
    anchors = random_boxes(rng, 3)
    gts = random_boxes(rng, 2)
    m = metric_matrix(anchors, gts, metric)
    for i in range(2):
        for j in range(3):
            scalar = iou(anchors[j], gts[i]) if metric == "iou" else ggiou(anchors[j], gts[i], metric)
            assert m.values[i, j] == scalar  # same kernel, 0 ulp


@pytest.mark.parametrize("metric", METRICS, ids=str)
def test_oracle_equivalence(rng, metric):
    for _ in range(20):
        m_, n_ = rng.integers(1, 65, size=2)
        anchors = random_boxes(rng, m_)
        gts = random_boxes(rng, n_)
        got = metric_matrix(anchors, gts, metric).values
        for i in range(n_):
            for j in range(m_):
                a, g = tuple(anchors[j]), tuple(gts[i])
                if metric == "iou":
                    want = naive_iou(a, g)
                else:
                    want = naive_ggiou(a, g, metric.alpha, metric.beta,
                                       metric.sigma_source is SigmaSource.TRUTH)
                assert got[i, j] == pytest.approx(want, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("workers,chunk", [(1, 1), (1, 7), (3, 5), (4, 64), (16, 1000)])
def test_chunking_and_workers_bit_identical(rng, workers, chunk):
    anchors = random_boxes(rng, 1000)
    gts = random_boxes(rng, 7)
    ref = metric_matrix(anchors, gts, GGIoUParams(), workers=1, chunk_size=10**6).values
    got = metric_matrix(anchors, gts, GGIoUParams(), workers=workers, chunk_size=chunk).values
    assert got.tobytes() == ref.tobytes()


def _mm(values):
    return MetricMatrix(np.asarray(values, dtype=float), "iou")


class TestArgmax:
    def test_per_anchor(self):
        idx, val = argmax_per_anchor(_mm([[0.2], [0.7]]))
        assert (idx[0], val[0]) == (1, 0.7)

    def test_per_anchor_tie(self):
        idx, val = argmax_per_anchor(_mm([[0.5], [0.5]]))
        assert (idx[0], val[0]) == (0, 0.5)

    def test_per_gt(self):
        idx, val = argmax_per_gt(_mm([[0.1, 0.9, 0.3]]))
        assert (idx[0], val[0]) == (1, 0.9)

    def test_per_gt_all_zero(self):
        idx, val = argmax_per_gt(_mm([[0.0, 0.0, 0.0]]))
        assert (idx[0], val[0]) == (0, 0.0)

    def test_empty_gt(self):
        with pytest.raises(EmptyGroundTruthError):
            argmax_per_anchor(_mm(np.zeros((0, 3))))
        with pytest.raises(EmptyGroundTruthError):
            argmax_per_gt(_mm(np.zeros((0, 3))))

    def test_brute_force(self, rng):
        for _ in range(50):
            # coarse values so ties are common
            v = rng.integers(0, 4, size=(4, 6)) / 4
            idx, val = argmax_per_anchor(_mm(v))
            for j in range(6):
                best = max(range(4), key=lambda i: (v[i, j], -i))
                assert idx[j] == best and val[j] == v[best, j]
            idx, val = argmax_per_gt(_mm(v))
            for i in range(4):
                best = max(range(6), key=lambda j: (v[i, j], -j))
                assert idx[i] == best and val[i] == v[i, best]
