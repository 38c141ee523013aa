"""Naive segmenters: Otsu thresholding, Canny edges and seeded region growing."""

from __future__ import annotations

from collections import deque

import numpy as np
from scipy import ndimage

from .errors import (
    EmptyHistogramError,
    InvalidThresholdsError,
    NonPositiveSigmaError,
    NoSeedsError,
    NotGrayscaleError,
)
from .raster import BG_SEED, FG_SEED, BinaryMask, Raster

_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)


def _require_gray(img: Raster) -> np.ndarray:
    if img.channels != 1:
        raise NotGrayscaleError("operation requires a single-channel raster")
    return img.data


def histogram(gray: Raster) -> np.ndarray:
    """256-bin intensity histogram; counts sum to the pixel count."""
    data = _require_gray(gray)
    return np.bincount(data.ravel(), minlength=256).astype(np.int64)


def otsu_threshold(h: np.ndarray) -> int:
    """Threshold maximizing between-class variance w0*w1*(mu0-mu1)^2.

    Classes are {v <= t} and {v > t}. Thresholds leaving either class empty
    score zero; ties break to the smallest t.
    """
    h = np.asarray(h, dtype=np.float64)
    total = h.sum()
    if total <= 0:
        raise EmptyHistogramError("histogram has no pixels")
    v = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(h)  # pixels with value <= t
    w1 = total - w0
    sum0 = np.cumsum(h * v)
    sum_total = sum0[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        mu0 = sum0 / w0
        mu1 = (sum_total - sum0) / w1
        sigma_b = (w0 / total) * (w1 / total) * (mu0 - mu1) ** 2
    sigma_b[(w0 == 0) | (w1 == 0)] = 0.0
    return int(np.argmax(sigma_b))  # argmax returns the first (smallest) maximizer


def threshold_segment(gray: Raster, t: int) -> BinaryMask:
    """Foreground = pixels strictly above t."""
    data = _require_gray(gray)
    return BinaryMask((data > t).astype(np.uint8))


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(np.ceil(3 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2 * sigma**2))
    return k / k.sum()


def _blur_float(data: np.ndarray, sigma: float) -> np.ndarray:
    k = gaussian_kernel(sigma)
    r = len(k) // 2
    padded = np.pad(data.astype(np.float64), ((r, r), (0, 0)), mode="edge")
    tmp = np.zeros_like(data, dtype=np.float64)
    for i, kv in enumerate(k):
        tmp += kv * padded[i : i + data.shape[0], :]
    padded = np.pad(tmp, ((0, 0), (r, r)), mode="edge")
    out = np.zeros_like(tmp)
    for i, kv in enumerate(k):
        out += kv * padded[:, i : i + data.shape[1]]
    return out


def gaussian_blur(gray: Raster, sigma: float) -> Raster:
    """Separable Gaussian blur, kernel radius ceil(3*sigma), clamp-to-edge."""
    if sigma <= 0:
        raise NonPositiveSigmaError(f"sigma must be > 0, got {sigma}")
    data = _require_gray(gray)
    out = np.rint(_blur_float(data, sigma))
    return Raster(np.clip(out, 0, 255).astype(np.uint8))


def sobel_gradients(gray: Raster) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel magnitude and direction (radians), clamp-to-edge borders."""
    data = _require_gray(gray).astype(np.float64)
    return _sobel_float(data)


def _sobel_float(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    padded = np.pad(data, 1, mode="edge")
    h, w = data.shape
    gx = np.zeros((h, w))
    gy = np.zeros((h, w))
    for dy in range(3):
        for dx in range(3):
            win = padded[dy : dy + h, dx : dx + w]
            gx += _SOBEL_X[dy, dx] * win
            gy += _SOBEL_Y[dy, dx] * win
    return np.hypot(gx, gy), np.arctan2(gy, gx)


def _non_maximum_suppression(mag: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Keep pixels that are >= both neighbors along the quantized gradient."""
    h, w = mag.shape
    padded = np.pad(mag, 1, mode="constant")
    # quantize direction (mod pi) into 4 bins: 0, 45, 90, 135 degrees
    ang = np.mod(direction, np.pi)
    bins = np.rint(ang / (np.pi / 4)).astype(int) % 4
    # neighbor offsets along the gradient for each bin (dy, dx)
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    keep = np.zeros((h, w), dtype=bool)
    for b, (dy, dx) in offsets.items():
        sel = bins == b
        n1 = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        n2 = padded[1 - dy : 1 - dy + h, 1 - dx : 1 - dx + w]
        # strict on one side so plateau ridges stay one pixel wide
        keep |= sel & (mag > n1) & (mag >= n2)
    return keep & (mag > 0)


def canny(gray: Raster, sigma: float, low: float, high: float) -> np.ndarray:
    """Canny edges: blur, Sobel, non-maximum suppression, hysteresis.

    Returns a boolean (h, w) edge map. Weak pixels (>= low) survive only if
    8-connected to a strong pixel (>= high) through kept pixels.
    """
    if not (0 < low < high):
        raise InvalidThresholdsError(f"need 0 < low < high, got low={low} high={high}")
    data = _require_gray(gray)
    mag, direction = _sobel_float(_blur_float(data, sigma))
    nms = _non_maximum_suppression(mag, direction)
    weak = nms & (mag >= low)
    strong = nms & (mag >= high)
    lab, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return np.zeros_like(weak)
    keep_ids = np.unique(lab[strong])
    keep_ids = keep_ids[keep_ids > 0]
    return np.isin(lab, keep_ids)


def edges_to_mask(edges: np.ndarray, close_iterations: int = 2) -> BinaryMask:
    """Close fragmented edges, then fill: everything not reachable from the
    border without crossing a closed edge becomes foreground."""
    edges = np.asarray(edges, dtype=bool)
    if not edges.any():
        return BinaryMask(np.zeros(edges.shape, dtype=np.uint8))
    closed = ndimage.binary_closing(
        edges, structure=np.ones((3, 3), dtype=bool), iterations=close_iterations
    )
    free = ~closed
    lab, _ = ndimage.label(free, structure=np.ones((3, 3), dtype=int))
    border_ids = np.unique(
        np.concatenate([lab[0, :], lab[-1, :], lab[:, 0], lab[:, -1]])
    )
    border_ids = border_ids[border_ids > 0]
    exterior = np.isin(lab, border_ids)
    return BinaryMask((~exterior).astype(np.uint8))


def region_grow(gray: Raster, seeds: np.ndarray, tau: float) -> BinaryMask:
    """Seeded growth over 4-connectivity with a running-mean criterion.

    A frontier pixel joins iff |I(p) - mean(region)| <= tau; the mean updates
    on every accepted pixel. BG seeds never join. FIFO frontier, seeds
    enqueued in row-major order, makes the result deterministic.
    """
    data = _require_gray(gray)
    h, w = data.shape
    seeds = np.asarray(seeds)
    fg = np.argwhere(seeds == FG_SEED)  # row-major (y, x)
    if len(fg) == 0:
        raise NoSeedsError("region growing requires at least one FG seed")
    blocked = seeds == BG_SEED
    member = np.zeros((h, w), dtype=bool)
    member[fg[:, 0], fg[:, 1]] = True
    total = float(data[fg[:, 0], fg[:, 1]].sum())
    count = len(fg)
    queue = deque((int(y), int(x)) for y, x in fg)
    while queue:
        y, x = queue.popleft()
        for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and not member[ny, nx] and not blocked[ny, nx]:
                v = float(data[ny, nx])
                if abs(v - total / count) <= tau:
                    member[ny, nx] = True
                    total += v
                    count += 1
                    queue.append((ny, nx))
    return BinaryMask(member.astype(np.uint8))
