"""Seeded graph-cut segmentation, Gaussian mixture color models and GrabCut.

Energy being minimized:

    E(l) = sum_p D_p(l_p) + lambda * sum_{4-neighbors (p,q)} B_pq * [l_p != l_q]

with D from per-class color histograms (graph cut) or GMM negative
log-likelihoods (GrabCut), and B_pq = exp(-dI^2 / (2 sigma_b^2)) on the
normalized gray intensity contrast dI. Foreground = source side of the cut.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateInitError, MissingSeedClassError, TooFewSamplesError
from .flow import FlowNetwork
from .raster import BG_SEED, FG_SEED, UNKNOWN, BinaryMask, Raster, rasterize, to_gray

EPS_REG = 1e-4  # variance floor for GMM components
_DENSITY_FLOOR = 1e-12
_HIST_FLOOR = 1e-8


@dataclass(frozen=True)
class GraphCutParams:
    """Constants of the segmentation energy.

    sigma_b=None means "derive from the image": mean absolute 4-neighbor
    intensity difference (normalized), floored at 1/255.
    """

    lam: float = 50.0
    sigma_b: float | None = None
    hist_bins: int = 32


def _neighbor_pairs(h: int, w: int):
    """Index arrays for right and down 4-neighbor pairs on an (h, w) grid."""
    idx = np.arange(h * w).reshape(h, w)
    pairs = []
    if w > 1:
        pairs.append((idx[:, :-1].ravel(), idx[:, 1:].ravel()))
    if h > 1:
        pairs.append((idx[:-1, :].ravel(), idx[1:, :].ravel()))
    p = np.concatenate([a for a, _ in pairs])
    q = np.concatenate([b for _, b in pairs])
    return p, q


def _boundary_weights(img: Raster, params: GraphCutParams):
    gray = to_gray(img).data.astype(np.float64) / 255.0
    h, w = gray.shape
    p, q = _neighbor_pairs(h, w)
    flat = gray.ravel()
    d = np.abs(flat[p] - flat[q])
    sigma = params.sigma_b
    if sigma is None:
        sigma = max(float(d.mean()) if len(d) else 0.0, 1.0 / 255.0)
    b = np.exp(-(d**2) / (2.0 * sigma**2))
    return p, q, b


def _channel_view(img: Raster) -> np.ndarray:
    """(n_pixels, channels) uint8 view of the image."""
    if img.channels == 1:
        return img.data.reshape(-1, 1)
    return img.data.reshape(-1, 3)


def _seed_histogram_loglik(pixels: np.ndarray, seed_pixels: np.ndarray, bins: int):
    """-log P(pixel | class) with per-channel add-one-smoothed histograms."""
    n, c = pixels.shape
    binned = (pixels.astype(np.int64) * bins) // 256
    seed_binned = (seed_pixels.astype(np.int64) * bins) // 256
    logp = np.zeros(n, dtype=np.float64)
    for ch in range(c):
        counts = np.bincount(seed_binned[:, ch], minlength=bins).astype(np.float64)
        prob = (counts + 1.0) / (counts.sum() + bins)
        logp += np.log(prob[binned[:, ch]])
    return -np.log(np.exp(logp) + _HIST_FLOOR)


def _solve_cut(img, d_fg, d_bg, hard_fg, hard_bg, params) -> BinaryMask:
    """Build the grid flow network and return the min-cut labeling.

    d_fg/d_bg: per-pixel costs of labeling foreground/background.
    hard_fg/hard_bg: boolean pixel sets receiving hard terminal links.
    """
    h, w = img.shape
    n = h * w
    p, q, b = _boundary_weights(img, params)
    nl = params.lam * b
    # a common shift keeps capacities nonnegative without moving the argmin
    shift = min(0.0, float(d_fg.min()), float(d_bg.min()))
    d_fg = d_fg - shift
    d_bg = d_bg - shift
    # finite "infinite" capacity: strictly above any achievable cut
    hard_cap = 1.0 + float(d_fg.sum() + d_bg.sum() + 2.0 * nl.sum())
    src_cap = d_bg.copy()  # cut when pixel lands background
    snk_cap = d_fg.copy()  # cut when pixel lands foreground
    src_cap[hard_fg.ravel()] = hard_cap
    snk_cap[hard_bg.ravel()] = hard_cap
    net = FlowNetwork(n)
    for i in range(n):
        net.add_tlink(i, src_cap[i], snk_cap[i])
    for pi, qi, c in zip(p.tolist(), q.tolist(), nl.tolist()):
        net.add_nlink(pi, qi, c)
    _, side = net.max_flow()
    return BinaryMask(side.reshape(h, w).astype(np.uint8))


def cut_energy(img: Raster, d_fg, d_bg, labels: np.ndarray, params: GraphCutParams) -> float:
    """Energy of a labeling under the same terms _solve_cut optimizes."""
    flat = np.asarray(labels).ravel().astype(bool)
    p, q, b = _boundary_weights(img, params)
    data = np.where(flat, d_fg, d_bg).sum()
    smooth = params.lam * b[flat[p] != flat[q]].sum()
    return float(data + smooth)


def graph_cut_segment(img: Raster, seeds: np.ndarray, params: GraphCutParams | None = None) -> BinaryMask:
    """Min-cut segmentation from FG/BG seed pixels.

    Data terms come from seed-pixel histograms; seeds are hard constraints,
    so every FG seed is foreground and every BG seed background in the output.
    """
    params = params or GraphCutParams()
    seeds = np.asarray(seeds)
    fg = seeds == FG_SEED
    bg = seeds == BG_SEED
    if not fg.any() or not bg.any():
        raise MissingSeedClassError("graph cut needs at least one seed of each class")
    pixels = _channel_view(img)
    d_fg = _seed_histogram_loglik(pixels, pixels[fg.ravel()], params.hist_bins)
    d_bg = _seed_histogram_loglik(pixels, pixels[bg.ravel()], params.hist_bins)
    return _solve_cut(img, d_fg, d_bg, fg, bg, params)


def graph_cut_data_terms(img: Raster, seeds: np.ndarray, params: GraphCutParams):
    """The histogram data terms used by graph_cut_segment (for oracles)."""
    seeds = np.asarray(seeds)
    pixels = _channel_view(img)
    d_fg = _seed_histogram_loglik(pixels, pixels[(seeds == FG_SEED).ravel()], params.hist_bins)
    d_bg = _seed_histogram_loglik(pixels, pixels[(seeds == BG_SEED).ravel()], params.hist_bins)
    return d_fg, d_bg


@dataclass(frozen=True)
class Gmm:
    """Diagonal-covariance RGB mixture over [0,1]^3 colors."""

    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, 3)
    variances: np.ndarray  # (K, 3), each >= EPS_REG
    loglik_trace: tuple = field(default_factory=tuple, compare=False)

    @property
    def n_components(self) -> int:
        return len(self.weights)


def _component_log_density(means, variances, x):
    """(n, K) log N(x_i; mu_k, diag sigma2_k)."""
    diff = x[:, None, :] - means[None, :, :]  # (n, K, 3)
    var = variances[None, :, :]
    return -0.5 * (np.log(2 * np.pi * var) + diff**2 / var).sum(axis=2)


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator, iters: int = 10):
    """k-means++ seeding followed by a few Lloyd iterations."""
    n = len(x)
    centers = [x[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min([np.sum((x - c) ** 2, axis=1) for c in centers], axis=0)
        tot = d2.sum()
        if tot <= 0:
            centers.append(x[rng.integers(n)])
        else:
            centers.append(x[rng.choice(n, p=d2 / tot)])
    centers = np.array(centers)
    assign = np.zeros(n, dtype=int)
    for _ in range(iters):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        for j in range(k):
            sel = assign == j
            if sel.any():
                centers[j] = x[sel].mean(axis=0)
    return centers, assign


def fit_gmm(pixels: np.ndarray, k: int, max_iters: int = 20, rng_seed: int = 0,
            tol: float = 1e-6) -> Gmm:
    """EM fit of a diagonal GMM; k-means++ init, variances floored at EPS_REG.

    The per-iteration log-likelihoods are kept on the result (loglik_trace);
    EM guarantees the sequence is nondecreasing.
    """
    x = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
    if len(x) < k:
        raise TooFewSamplesError(f"{len(x)} pixels for {k} components")
    rng = np.random.default_rng(rng_seed)
    centers, assign = _kmeans_pp(x, k, rng)
    weights = np.empty(k)
    means = centers.copy()
    variances = np.empty((k, 3))
    for j in range(k):
        sel = assign == j
        if not sel.any():
            sel = np.ones(len(x), dtype=bool)
        weights[j] = max(sel.mean(), 1e-6)
        means[j] = x[sel].mean(axis=0)
        variances[j] = np.maximum(x[sel].var(axis=0), EPS_REG)
    weights /= weights.sum()

    trace = []
    prev = -np.inf
    for _ in range(max_iters):
        # E step
        logd = _component_log_density(means, variances, x) + np.log(weights)[None, :]
        m = logd.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(logd - m).sum(axis=1))
        ll = float(lse.sum())
        trace.append(ll)
        resp = np.exp(logd - lse[:, None])  # (n, K)
        # M step
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-12)
        weights = nk / nk.sum()
        means = (resp.T @ x) / nk[:, None]
        sq = resp.T @ (x**2) / nk[:, None]
        variances = np.maximum(sq - means**2, EPS_REG)
        if ll - prev < tol and np.isfinite(prev):
            break
        prev = ll
    return Gmm(weights, means, variances, tuple(trace))


def gmm_neg_loglik(g: Gmm, pixels: np.ndarray) -> np.ndarray:
    """-log mixture density, vectorized; density floored to stay finite."""
    x = np.asarray(pixels, dtype=np.float64).reshape(-1, 3)
    logd = _component_log_density(g.means, g.variances, x) + np.log(g.weights)[None, :]
    m = logd.max(axis=1, keepdims=True)
    dens = np.exp(m[:, 0]) * np.exp(logd - m).sum(axis=1)
    return -np.log(dens + _DENSITY_FLOOR)


# trimap states
_HARD_BG = 0
_HARD_FG = 1
_PROB_BG = 2
_PROB_FG = 3


def _trimap_from_rect(shape, rect):
    x0, y0, x1, y1 = rect  # half-open [x0,x1) x [y0,y1)
    h, w = shape
    if not (0 <= x0 < x1 <= w and 0 <= y0 < y1 <= h):
        raise DegenerateInitError(f"rectangle {rect} invalid for {w}x{h}")
    tri = np.full(shape, _HARD_BG, dtype=np.uint8)
    tri[y0:y1, x0:x1] = _PROB_FG
    if not (tri == _HARD_BG).any():
        raise DegenerateInitError("rectangle covers the whole image")
    return tri


def _trimap_from_seeds(shape, seeds):
    seeds = np.asarray(seeds)
    if not (seeds == FG_SEED).any() or not (seeds == BG_SEED).any():
        raise DegenerateInitError("annotation needs both FG and BG strokes")
    tri = np.full(shape, _PROB_BG, dtype=np.uint8)
    tri[seeds == FG_SEED] = _HARD_FG
    tri[seeds == BG_SEED] = _HARD_BG
    # unknown pixels start as probable foreground so both GMMs see data
    tri[(seeds == UNKNOWN)] = _PROB_FG
    if not ((tri == _HARD_BG) | (tri == _PROB_BG)).any():
        raise DegenerateInitError("no background pixels at initialization")
    return tri


def _rgb01(img: Raster) -> np.ndarray:
    if img.channels == 1:
        rgb = np.repeat(img.data[:, :, None], 3, axis=2)
    else:
        rgb = img.data
    return rgb.reshape(-1, 3).astype(np.float64) / 255.0


def grabcut(img: Raster, init, k: int = 5, params: GraphCutParams | None = None,
            max_rounds: int = 5, rng_seed: int = 0) -> BinaryMask:
    """Iterative GMM + graph-cut segmentation.

    init is either a rectangle (x0, y0, x1, y1), half-open, whose interior
    becomes probable foreground and exterior hard background, or an
    Annotation/LabelRaster supplying hard seeds of both classes. Hard
    background pixels are always 0 in the result.
    """
    params = params or GraphCutParams()
    h, w = img.shape
    if isinstance(init, tuple):
        tri = _trimap_from_rect((h, w), init)
    elif hasattr(init, "strokes"):
        tri = _trimap_from_seeds((h, w), rasterize(init, w, h))
    else:
        tri = _trimap_from_seeds((h, w), init)

    x = _rgb01(img)
    fg_now = (tri == _HARD_FG) | (tri == _PROB_FG)
    prev = None
    for rnd in range(max_rounds):
        bg_now = ~fg_now
        n_fg, n_bg = int(fg_now.sum()), int(bg_now.sum())
        if n_fg == 0 or n_bg == 0:
            break
        k_fg = max(1, min(k, n_fg))
        k_bg = max(1, min(k, n_bg))
        gmm_fg = fit_gmm(x[fg_now.ravel()], k_fg, rng_seed=rng_seed + 2 * rnd)
        gmm_bg = fit_gmm(x[bg_now.ravel()], k_bg, rng_seed=rng_seed + 2 * rnd + 1)
        d_fg = gmm_neg_loglik(gmm_fg, x)
        d_bg = gmm_neg_loglik(gmm_bg, x)
        cut = _solve_cut(img, d_fg, d_bg, tri == _HARD_FG, tri == _HARD_BG, params)
        fg_new = cut.labels.astype(bool)
        # only probable pixels may flip
        fg_new[tri == _HARD_FG] = True
        fg_new[tri == _HARD_BG] = False
        if prev is not None and np.array_equal(fg_new, prev):
            fg_now = fg_new
            break
        prev = fg_now = fg_new
    return BinaryMask(fg_now.astype(np.uint8))
