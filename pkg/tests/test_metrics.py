import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from segbench.errors import DimensionMismatchError, EmptyGroundTruthError, EmptyRecordError
from segbench.interact import SessionRecord
from segbench.metrics import alpha_beta, iou, iou_improvement, time_block
from segbench.raster import BinaryMask

masks_8x8 = hnp.arrays(np.uint8, (8, 8), elements=st.integers(0, 1))


def block(size, count):
    m = np.zeros((size, size), dtype=np.uint8)
    m.flat[:count] = 1
    return BinaryMask(m)


class TestIou:
    def test_identical(self):
        m = block(8, 10)
        assert iou(m, m) == 1.0

    def test_disjoint(self):
        a = np.zeros((4, 4), dtype=np.uint8)
        a[0, 0] = 1
        b = np.zeros((4, 4), dtype=np.uint8)
        b[3, 3] = 1
        assert iou(BinaryMask(a), BinaryMask(b)) == 0.0

    def test_both_empty(self):
        e = BinaryMask(np.zeros((4, 4), dtype=np.uint8))
        assert iou(e, e) == 1.0

    def test_half_overlap_block(self):
        gt = np.zeros((20, 20), dtype=np.uint8)
        gt[0:10, 0:10] = 1  # 100 px
        pred = np.zeros((20, 20), dtype=np.uint8)
        pred[5:15, 0:10] = 1  # shifted, overlap 50
        assert iou(BinaryMask(gt), BinaryMask(pred)) == pytest.approx(50 / 150)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            iou(block(4, 2), block(5, 2))

    @settings(max_examples=100, deadline=None)
    @given(masks_8x8, masks_8x8)
    def test_axioms_and_pixel_counting(self, a, b):
        ma, mb = BinaryMask(a), BinaryMask(b)
        v = iou(ma, mb)
        assert 0.0 <= v <= 1.0
        assert v == iou(mb, ma)
        inter = int((a & b).sum())
        union = int((a | b).sum())
        assert v == (inter / union if union else 1.0)

    def test_random_16x16_exact_counting(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a = rng.integers(0, 2, (16, 16), dtype=np.uint8)
            b = rng.integers(0, 2, (16, 16), dtype=np.uint8)
            inter = int((a & b).sum())
            union = int((a | b).sum())
            expect = inter / union if union else 1.0
            assert iou(BinaryMask(a), BinaryMask(b)) == expect


class TestAlphaBeta:
    def test_equal_masks(self):
        m = block(8, 12)
        assert alpha_beta(m, m) == (1.0, 1.0)

    def test_empty_prediction(self):
        gt = block(8, 12)
        empty = BinaryMask(np.zeros((8, 8), dtype=np.uint8))
        assert alpha_beta(gt, empty) == (1.0, 0.0)

    def test_superset_prediction(self):
        gt = block(20, 100)
        pred = block(20, 150)  # gt plus 50 extra pixels
        a, b = alpha_beta(gt, pred)
        assert a == pytest.approx(1.5)
        assert b == pytest.approx(1.5)

    def test_empty_gt(self):
        with pytest.raises(EmptyGroundTruthError):
            alpha_beta(BinaryMask(np.zeros((4, 4), dtype=np.uint8)), block(4, 2))


class TestIouImprovement:
    def record(self, trace):
        rec = SessionRecord("img", "alg", "proto")
        rec.masks = [block(4, 2)] * len(trace)
        rec.iou_trace = list(trace)
        return rec

    def test_no_change(self):
        assert iou_improvement(self.record([0.7])) == 0.0

    def test_subtraction(self):
        assert iou_improvement(self.record([0.6, 0.7, 0.85])) == pytest.approx(0.25)

    def test_empty_record(self):
        with pytest.raises(EmptyRecordError):
            iou_improvement(SessionRecord("i", "a", "p"))


class TestTimeBlock:
    def test_noop_nonnegative(self):
        _, s = time_block(lambda: None)
        assert s >= 0.0

    def test_sleep_bounds(self):
        _, s = time_block(time.sleep, 0.05)
        assert 0.05 <= s <= 0.5

    def test_independent_blocks(self):
        _, s1 = time_block(time.sleep, 0.03)
        _, s2 = time_block(lambda: None)
        assert s2 < s1  # second timer did not accumulate the first

    def test_returns_result(self):
        r, _ = time_block(lambda a, b: a + b, 2, 3)
        assert r == 5
