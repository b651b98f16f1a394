import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ggiou.geometry import (
    Box,
    GGIoUParams,
    InvalidBoxError,
    SigmaSource,
    area,
    gaussian_distance,
    ggiou,
    intersect,
    iou,
    normalize,
    paired_ggiou,
    paired_iou,
)
from oracles import naive_gaussian_distance, naive_ggiou, naive_iou

OVERLAP = GGIoUParams(alpha=0.3, beta=1 / 6)
TRUTH = GGIoUParams(alpha=0.3, beta=1 / 6, sigma_source=SigmaSource.TRUTH)

coord = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
extent = st.floats(min_value=1e-2, max_value=5e2)


@st.composite
def boxes(draw):
    x, y = draw(coord), draw(coord)
    return Box(x, y, x + draw(extent), y + draw(extent))


@st.composite
def overlapping_pair(draw):
    a = draw(boxes())
    # truth box with its top-left corner inside the anchor
    fx, fy = draw(st.floats(0, 0.95)), draw(st.floats(0, 0.95))
    x, y = a.x1 + fx * a.width, a.y1 + fy * a.height
    return a, Box(x, y, x + draw(extent), y + draw(extent))


params_st = st.builds(
    GGIoUParams,
    alpha=st.floats(0, 1),
    beta=st.floats(0.05, 1.0),
    sigma_source=st.sampled_from(list(SigmaSource)),
)


class TestNormalize:
    @pytest.mark.parametrize("raw,expected", [
        ((3, 4, 1, 2), (1, 2, 3, 4)),
        ((1, 2, 3, 4), (1, 2, 3, 4)),
        ((5, 5, 5, 5), (5, 5, 5, 5)),
    ])
    def test_examples(self, raw, expected):
        assert tuple(normalize(raw)) == expected

    def test_non_finite(self):
        with pytest.raises(InvalidBoxError):
            normalize((0, math.nan, 1, 1))
        with pytest.raises(InvalidBoxError):
            iou((0, 0, math.inf, 1), (0, 0, 1, 1))

    @given(boxes())
    def test_idempotent(self, b):
        assert normalize(normalize(b)) == normalize(b)


@pytest.mark.parametrize("b,expected", [((0, 0, 2, 2), 4), ((0, 0, 2, 0), 0), ((1, 1, 4, 3), 6)])
def test_area(b, expected):
    assert area(b) == expected


class TestIntersect:
    def test_partial(self):
        i = intersect((0, 0, 2, 2), (1, 1, 3, 3))
        assert (i.w, i.h, i.area) == (1, 1, 1)

    def test_disjoint(self):
        i = intersect((0, 0, 1, 1), (2, 2, 3, 3))
        assert (i.w, i.h, i.area) == (0, 0, 0)

    def test_containment(self):
        i = intersect((0, 0, 4, 4), (1, 1, 3, 3))
        assert (i.w, i.h, i.area) == (2, 2, 4)

    @given(boxes(), boxes())
    def test_commutative_and_bounded(self, a, b):
        i, j = intersect(a, b), intersect(b, a)
        assert i == j
        assert i.area == i.w * i.h
        assert i.w <= min(a.width, b.width) and i.h <= min(a.height, b.height)


class TestIoU:
    def test_examples(self):
        assert iou((0, 0, 2, 2), (0, 0, 2, 2)) == 1.0
        assert iou((0, 0, 1, 1), (2, 2, 3, 3)) == 0.0
        assert iou((0, 0, 2, 2), (1, 1, 3, 3)) == pytest.approx(1 / 7, rel=1e-15)

    def test_both_degenerate_is_zero(self):
        assert iou((1, 1, 1, 1), (1, 1, 1, 1)) == 0.0

    @given(boxes(), boxes())
    def test_symmetric_in_unit_interval(self, a, b):
        v = iou(a, b)
        assert 0.0 <= v <= 1.0
        assert v == iou(b, a)

    @given(boxes(), boxes())
    def test_matches_oracle(self, a, b):
        assert iou(a, b) == pytest.approx(naive_iou(tuple(a), tuple(b)), rel=1e-12, abs=1e-15)


class TestGaussianDistance:
    a, g = Box(0, 0, 4, 4), Box(2, 0, 6, 4)

    def test_overlap_source(self):
        # dx = 2, sigma1 = 2/6 -> exponent -18
        assert gaussian_distance(self.a, self.g, OVERLAP) == pytest.approx(math.exp(-18), rel=1e-12)

    def test_truth_source(self):
        # sigma1 = 4/6 -> exponent -4.5
        assert gaussian_distance(self.a, self.g, TRUTH) == pytest.approx(math.exp(-4.5), rel=1e-12)

    def test_concentric_is_one(self):
        assert gaussian_distance((2, 2, 8, 8), (0, 0, 10, 10), OVERLAP) == 1.0

    def test_zero_sigma(self):
        # touching edges: overlap width 0 along x with nonzero dx
        assert gaussian_distance((0, 0, 2, 2), (2, 0, 4, 2), OVERLAP) == 0.0
        # zero-width overlap column at identical centers
        assert gaussian_distance((1, 0, 1, 2), (1, 0, 1, 2), OVERLAP) == 1.0

    @given(overlapping_pair(), params_st)
    def test_matches_oracle(self, pair, p):
        a, g = pair
        truth = p.sigma_source is SigmaSource.TRUTH
        expected = naive_gaussian_distance(tuple(a), tuple(g), p.beta, truth)
        assert gaussian_distance(a, g, p) == pytest.approx(expected, rel=1e-9, abs=1e-300)


class TestGGIoU:
    def test_worked_value(self):
        expected = (1 / 3) ** 0.7 * math.exp(-18) ** 0.3
        assert ggiou(Box(0, 0, 4, 4), Box(2, 0, 6, 4), OVERLAP) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(2.09e-3, rel=2e-3)

    @given(boxes(), params_st)
    def test_identical_boxes(self, b, p):
        assert ggiou(b, b, p) == pytest.approx(1.0, rel=1e-12)

    @given(boxes(), boxes(), st.sampled_from(list(SigmaSource)), st.floats(0.05, 1))
    def test_alpha_zero_is_iou(self, a, b, src, beta):
        assert ggiou(a, b, GGIoUParams(0.0, beta, src)) == iou(a, b)

    def test_disjoint_is_zero(self):
        for alpha in (0.0, 0.3, 1.0):
            assert ggiou((0, 0, 1, 1), (5, 5, 6, 6), GGIoUParams(alpha=alpha)) == 0.0

    @given(boxes(), boxes(), params_st)
    def test_bounds(self, a, b, p):
        v = ggiou(a, b, p)
        assert 0.0 <= v <= 1.0
        assert v <= iou(a, b) ** (1 - p.alpha) * (1 + 1e-12)

    @given(overlapping_pair(), params_st)
    def test_matches_oracle(self, pair, p):
        a, g = pair
        truth = p.sigma_source is SigmaSource.TRUTH
        expected = naive_ggiou(tuple(a), tuple(g), p.alpha, p.beta, truth)
        assert ggiou(a, g, p) == pytest.approx(expected, rel=1e-9, abs=1e-300)

    @given(overlapping_pair(), st.floats(0.01, 100))
    def test_scale_invariant(self, pair, s):
        a, g = pair
        v = ggiou(a, g, OVERLAP)
        assert ggiou(a.scaled(s), g.scaled(s), OVERLAP) == pytest.approx(v, rel=1e-9, abs=1e-300)

    @given(overlapping_pair(), coord, coord)
    def test_translation_invariant(self, pair, dx, dy):
        a, g = pair
        # shifting rounds coordinates at ulp(|shift|); the exponent amplifies that by
        # q * |shift| / extent, so keep the shift within 1e3 box extents
        smallest = min(a.width, a.height, g.width, g.height)
        assume(max(abs(dx), abs(dy), *map(abs, a), *map(abs, g)) <= 1e3 * smallest)
        v = ggiou(a, g, OVERLAP)
        shifted = ggiou(a.shifted(dx, dy), g.shifted(dx, dy), OVERLAP)
        assert shifted == pytest.approx(v, rel=1e-9, abs=1e-300)

    @settings(max_examples=200)
    @given(st.floats(0.05, 0.9), st.floats(0.01, 0.99), st.floats(0.05, 1.0))
    def test_center_monotonicity(self, frac, t, alpha):
        # anchor strictly inside gt, slid toward the center along x
        g = Box(0, 0, 100, 50)
        w = 100 * frac
        slack = (100 - w) / 2
        far, near = slack * t, slack * t / 2
        a_far = Box(50 + far - w / 2, 10, 50 + far + w / 2, 40)
        a_near = Box(50 + near - w / 2, 10, 50 + near + w / 2, 40)
        assume(a_far.x2 < 100)
        p = GGIoUParams(alpha=alpha)
        assert iou(a_far, g) == pytest.approx(iou(a_near, g), rel=1e-12)
        assert ggiou(a_near, g, p) > ggiou(a_far, g, p)

    @given(overlapping_pair(), st.floats(0, 1), st.floats(0, 1))
    def test_alpha_log_linear(self, pair, a1, a2):
        a, g = pair
        lo, hi = sorted((a1, a2))
        assume(hi - lo > 1e-3)
        i = iou(a, g)
        dc = gaussian_distance(a, g, OVERLAP)
        assume(abs(dc - i) > 1e-6 and dc > 1e-200)
        v_lo = ggiou(a, g, GGIoUParams(alpha=lo))
        v_hi = ggiou(a, g, GGIoUParams(alpha=hi))
        if dc < i:
            assert v_hi <= v_lo
        else:
            assert v_hi >= v_lo

    def test_truth_source_not_symmetric(self):
        a, g = Box(0, 0, 4, 4), Box(1, 0, 9, 4)
        assert ggiou(a, g, TRUTH) != ggiou(g, a, TRUTH)


def test_paired_broadcasts():
    a = np.array([[0, 0, 2, 2], [0, 0, 4, 4]], float)
    g = np.array([1, 1, 3, 3], float)
    out = paired_iou(a, g)
    assert out.shape == (2,)
    assert out[0] == iou(a[0], g)
    assert paired_ggiou(a, g, OVERLAP)[1] == ggiou(a[1], g, OVERLAP)


def test_params_validation():
    with pytest.raises(ValueError):
        GGIoUParams(alpha=1.5)
    with pytest.raises(ValueError):
        GGIoUParams(beta=0)
    assert GGIoUParams(sigma_source="gt").sigma_source is SigmaSource.TRUTH
