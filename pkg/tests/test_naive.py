import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segbench.errors import (
    EmptyHistogramError,
    InvalidThresholdsError,
    NonPositiveSigmaError,
    NoSeedsError,
    NotGrayscaleError,
)
from segbench.naive import (
    canny,
    edges_to_mask,
    gaussian_blur,
    gaussian_kernel,
    histogram,
    otsu_threshold,
    region_grow,
    sobel_gradients,
    threshold_segment,
)
from segbench.raster import BG_SEED, FG_SEED, UNKNOWN, Raster
from tests.conftest import disk_image


def otsu_brute_force(h):
    """Independent oracle: scan all 256 thresholds, smallest argmax wins."""
    h = np.asarray(h, dtype=float)
    total = h.sum()
    best_t, best_s = 0, -1.0
    for t in range(256):
        w0 = h[: t + 1].sum()
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            s = 0.0
        else:
            mu0 = (h[: t + 1] * np.arange(t + 1)).sum() / w0
            mu1 = (h[t + 1 :] * np.arange(t + 1, 256)).sum() / w1
            s = (w0 / total) * (w1 / total) * (mu0 - mu1) ** 2
        if s > best_s:
            best_t, best_s = t, s
    return best_t


class TestHistogram:
    def test_all_zero(self):
        h = histogram(Raster(np.zeros((2, 2), dtype=np.uint8)))
        assert h[0] == 4 and h[1:].sum() == 0

    def test_mixed_values(self):
        h = histogram(Raster(np.array([[0, 0], [1, 255]], dtype=np.uint8)))
        assert (h[0], h[1], h[255]) == (2, 1, 1)

    def test_sums_to_pixel_count(self, noiseless_disk_dataset):
        from segbench.raster import to_gray

        _, img, _ = noiseless_disk_dataset[0]
        assert histogram(to_gray(img)).sum() == 64 * 64

    def test_rejects_rgb(self):
        with pytest.raises(NotGrayscaleError):
            histogram(Raster(np.zeros((2, 2, 3), dtype=np.uint8)))


class TestOtsu:
    def test_two_spike(self):
        h = np.zeros(256, dtype=int)
        h[10] = 50
        h[200] = 50
        assert otsu_threshold(h) == 10  # any t in [10,199] ties; smallest wins

    def test_single_value_degenerate(self):
        h = np.zeros(256, dtype=int)
        h[7] = 100
        assert otsu_threshold(h) == 0

    def test_empty_histogram(self):
        with pytest.raises(EmptyHistogramError):
            otsu_threshold(np.zeros(256, dtype=int))

    def test_matches_brute_force_on_random_histograms(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            h = rng.integers(0, 100, size=256)
            assert otsu_threshold(h) == otsu_brute_force(h)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.integers(0, 50), min_size=256, max_size=256))
    def test_property_equals_oracle(self, counts):
        h = np.array(counts)
        if h.sum() == 0:
            return
        assert otsu_threshold(h) == otsu_brute_force(h)


class TestThresholdSegment:
    def test_t255_all_zero(self):
        g = Raster(np.arange(4, dtype=np.uint8).reshape(2, 2))
        assert threshold_segment(g, 255).area() == 0

    def test_t0_indicator(self):
        g = Raster(np.array([[0, 1], [1, 0]], dtype=np.uint8))
        m = threshold_segment(g, 0)
        assert np.array_equal(m.labels, np.array([[0, 1], [1, 0]]))

    def test_otsu_on_bimodal_disk(self):
        from segbench.metrics import iou

        img, gt = disk_image(sigma=10.0, seed=3)
        t = otsu_threshold(histogram(img))
        assert iou(gt, threshold_segment(img, t)) >= 0.95


def dense_blur_oracle(data, sigma):
    """Brute-force 2-D convolution with the same clamp-to-edge policy."""
    k1 = gaussian_kernel(sigma)
    k2 = np.outer(k1, k1)
    r = len(k1) // 2
    padded = np.pad(data.astype(float), r, mode="edge")
    h, w = data.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            out[y, x] = (padded[y : y + 2 * r + 1, x : x + 2 * r + 1] * k2).sum()
    return out


class TestGaussianBlur:
    def test_constant_unchanged(self):
        g = Raster(np.full((9, 9), 77, dtype=np.uint8))
        assert np.array_equal(gaussian_blur(g, 1.0).data, g.data)

    def test_impulse_response(self):
        data = np.zeros((9, 9), dtype=np.uint8)
        data[4, 4] = 255
        out = gaussian_blur(Raster(data), 1.0)
        k = gaussian_kernel(1.0)
        assert out.data[4, 4] == round(255 * k[len(k) // 2] ** 2)
        assert abs(int(out.data.sum()) - 255) <= 81  # rounding slack

    @pytest.mark.parametrize("sigma", [0.5, 2.0])
    def test_matches_dense_convolution(self, sigma):
        rng = np.random.default_rng(5)
        data = rng.integers(0, 256, (12, 12), dtype=np.uint8)
        out = gaussian_blur(Raster(data), sigma)
        oracle = np.clip(np.rint(dense_blur_oracle(data, sigma)), 0, 255)
        assert np.abs(out.data.astype(int) - oracle.astype(int)).max() <= 1

    def test_rejects_nonpositive_sigma(self):
        with pytest.raises(NonPositiveSigmaError):
            gaussian_blur(Raster(np.zeros((3, 3), dtype=np.uint8)), 0.0)


class TestSobel:
    def test_constant_zero_magnitude(self):
        mag, _ = sobel_gradients(Raster(np.full((5, 5), 9, dtype=np.uint8)))
        assert (mag == 0).all()

    def test_vertical_step(self):
        data = np.zeros((8, 8), dtype=np.uint8)
        data[:, 4:] = 255
        mag, d = sobel_gradients(Raster(data))
        # interior rows, step columns: |gx| = 4*255
        for y in range(1, 7):
            assert mag[y, 3] == pytest.approx(4 * 255)
            assert mag[y, 4] == pytest.approx(4 * 255)
            assert abs(d[y, 3]) in (pytest.approx(0.0), pytest.approx(np.pi))

    def test_horizontal_step_symmetry(self):
        data = np.zeros((8, 8), dtype=np.uint8)
        data[4:, :] = 255
        mag, d = sobel_gradients(Raster(data))
        for x in range(1, 7):
            assert mag[3, x] == pytest.approx(4 * 255)
            assert abs(d[3, x]) == pytest.approx(np.pi / 2)


class TestCanny:
    def test_constant_empty(self):
        edges = canny(Raster(np.full((16, 16), 40, dtype=np.uint8)), 1.0, 50, 150)
        assert not edges.any()

    def test_invalid_thresholds(self):
        g = Raster(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(InvalidThresholdsError):
            canny(g, 1.0, 150, 50)

    def test_vertical_step_edge(self):
        data = np.zeros((32, 32), dtype=np.uint8)
        data[:, 16:] = 255
        edges = canny(Raster(data), 1.0, 50, 150)
        assert edges.any()
        cols = np.nonzero(edges)[1]
        near = np.abs(cols.astype(int) - 15.5) <= 1.5
        assert near.mean() >= 0.9
        # single-pixel-wide chain: at most one edge pixel per row
        assert edges.sum(axis=1).max() == 1

    def test_brightness_shift_invariant(self):
        rng = np.random.default_rng(7)
        data = rng.integers(20, 200, (24, 24), dtype=np.uint8)
        e1 = canny(Raster(data), 1.0, 40, 120)
        e2 = canny(Raster((data + 10).astype(np.uint8)), 1.0, 40, 120)
        assert np.array_equal(e1, e2)

    def test_nms_subset_of_positive_magnitude(self):
        rng = np.random.default_rng(8)
        data = rng.integers(0, 256, (16, 16), dtype=np.uint8)
        edges = canny(Raster(data), 1.0, 10, 30)
        from segbench.naive import _blur_float, _sobel_float

        mag, _ = _sobel_float(_blur_float(data, 1.0))
        assert not edges[mag == 0].any()


class TestEdgesToMask:
    def test_empty_edges(self):
        assert edges_to_mask(np.zeros((8, 8), dtype=bool)).area() == 0

    def test_closed_square_fills(self):
        edges = np.zeros((20, 20), dtype=bool)
        edges[5, 5:15] = edges[14, 5:15] = True
        edges[5:15, 5] = edges[5:15, 14] = True
        mask = edges_to_mask(edges)
        # oracle: flood fill the closed contour directly
        assert mask.labels[10, 10] == 1
        assert mask.labels[0, 0] == 0
        assert mask.area() >= 10 * 10

    def test_small_gap_closed(self):
        edges = np.zeros((20, 20), dtype=bool)
        edges[5, 5:15] = edges[14, 5:15] = True
        edges[5:15, 5] = edges[5:15, 14] = True
        gapped = edges.copy()
        gapped[9, 5] = False  # 1-px gap, within closing reach
        assert edges_to_mask(gapped) == edges_to_mask(edges)

    def test_exterior_never_foreground(self):
        rng = np.random.default_rng(9)
        edges = rng.random((16, 16)) < 0.2
        mask = edges_to_mask(edges)
        from scipy import ndimage

        closed = ndimage.binary_closing(edges, structure=np.ones((3, 3), bool), iterations=2)
        lab, _ = ndimage.label(~closed, structure=np.ones((3, 3), int))
        border = np.unique(np.concatenate(
            [lab[0, :], lab[-1, :], lab[:, 0], lab[:, -1]]))
        border = border[border > 0]
        exterior = np.isin(lab, border)
        assert not mask.labels[exterior].any()


class TestRegionGrow:
    def seeds_at(self, shape, fg_points, bg_points=()):
        s = np.full(shape, UNKNOWN, dtype=np.uint8)
        for x, y in fg_points:
            s[y, x] = FG_SEED
        for x, y in bg_points:
            s[y, x] = BG_SEED
        return s

    def test_tau0_constant_floods_all(self):
        g = Raster(np.full((6, 6), 50, dtype=np.uint8))
        m = region_grow(g, self.seeds_at((6, 6), [(0, 0)]), 0.0)
        assert m.area() == 36

    def test_tau0_two_halves(self):
        data = np.full((6, 8), 10, dtype=np.uint8)
        data[:, 4:] = 200
        m = region_grow(Raster(data), self.seeds_at((6, 8), [(1, 1)]), 0.0)
        assert np.array_equal(m.labels, (data == 10).astype(np.uint8))

    def test_noisy_disk(self):
        from segbench.metrics import iou

        img, gt = disk_image(sigma=10.0, seed=11)
        m = region_grow(img, self.seeds_at((64, 64), [(32, 32)]), 25.0)
        assert iou(gt, m) >= 0.95

    def test_requires_seed(self):
        g = Raster(np.zeros((4, 4), dtype=np.uint8))
        with pytest.raises(NoSeedsError):
            region_grow(g, np.zeros((4, 4), dtype=np.uint8), 5.0)

    def test_bg_seed_blocks(self):
        g = Raster(np.full((3, 3), 10, dtype=np.uint8))
        m = region_grow(g, self.seeds_at((3, 3), [(0, 0)], [(1, 1)]), 0.0)
        assert m.labels[1, 1] == 0

    def test_monotone_in_tau_on_biconstant(self):
        data = np.full((8, 8), 10, dtype=np.uint8)
        data[:, 4:] = 60
        seeds = self.seeds_at((8, 8), [(0, 0)])
        prev = 0
        for tau in (0.0, 10.0, 60.0):
            area = region_grow(Raster(data), seeds, tau).area()
            assert area >= prev
            prev = area
