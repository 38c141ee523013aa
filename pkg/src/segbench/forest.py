"""Per-pixel feature extraction and a from-scratch random-forest classifier."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import FeatureMismatchError, InsufficientLabelsError
from .naive import sobel_gradients
from .raster import BG_SEED, FG_SEED, BinaryMask, Raster, to_gray

FEATURE_NAMES = (
    "gray", "r", "g", "b", "gradient_magnitude",
    "local_mean_r3", "local_std_r3", "x_norm", "y_norm",
)
_LOCAL_WINDOW = 7  # (2*3+1)^2 neighborhood for local statistics


@dataclass(frozen=True)
class FeatureStack:
    """(h, w, 9) float feature planes in FEATURE_NAMES order."""

    planes: np.ndarray
    names: tuple = FEATURE_NAMES

    @property
    def shape(self) -> tuple[int, int]:
        return self.planes.shape[:2]

    def matrix(self) -> np.ndarray:
        return self.planes.reshape(-1, self.planes.shape[2])


def extract_features(img: Raster) -> FeatureStack:
    """Color, gradient, local texture statistics and normalized coordinates.

    Gray inputs replicate the gray plane into R, G, B.
    """
    h, w = img.shape
    gray = to_gray(img)
    g = gray.data.astype(np.float64)
    if img.channels == 3:
        r, gg, b = (img.data[:, :, i].astype(np.float64) for i in range(3))
    else:
        r = gg = b = g
    mag, _ = sobel_gradients(gray)
    mean = ndimage.uniform_filter(g, size=_LOCAL_WINDOW, mode="nearest")
    sqmean = ndimage.uniform_filter(g**2, size=_LOCAL_WINDOW, mode="nearest")
    std = np.sqrt(np.maximum(sqmean - mean**2, 0.0))
    xs = np.tile(np.arange(w) / max(w - 1, 1), (h, 1))
    ys = np.tile((np.arange(h) / max(h - 1, 1))[:, None], (1, w))
    planes = np.stack([g, r, gg, b, mag, mean, std, xs, ys], axis=2)
    return FeatureStack(planes)


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 50
    max_depth: int = 12
    min_samples_leaf: int = 5
    features_per_split: int | None = None  # None -> ceil(sqrt(F))
    rng_seed: int = 0


@dataclass(frozen=True)
class DecisionTree:
    """Flattened binary tree.

    Internal node i: feature[i] >= 0, threshold[i], children left/right.
    Leaf: feature[i] == -1, prob[i] = foreground probability.
    """

    feature: np.ndarray  # (m,) int32
    threshold: np.ndarray  # (m,) float64
    left: np.ndarray  # (m,) int32
    right: np.ndarray  # (m,) int32
    prob: np.ndarray  # (m,) float64

    def predict(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(len(x), dtype=np.int32)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            nd = node[idx]
            go_left = x[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return self.prob[node]

    def depth(self) -> int:
        def rec(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(rec(self.left[i]), rec(self.right[i]))
        return rec(0)


@dataclass(frozen=True)
class Forest:
    trees: tuple
    params: ForestParams
    n_features: int = len(FEATURE_NAMES)


class _TreeBuilder:
    def __init__(self, x, y, params, n_feat_split, rng):
        self.x = x
        self.y = y
        self.params = params
        self.n_feat_split = n_feat_split
        self.rng = rng
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.prob = []

    def _new_node(self):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.prob.append(0.0)
        return len(self.feature) - 1

    def build(self, idx, depth):
        node = self._new_node()
        y = self.y[idx]
        p = float(y.mean())
        self.prob[node] = p
        if depth >= self.params.max_depth or p in (0.0, 1.0) or len(idx) < 2 * self.params.min_samples_leaf:
            return node
        feat, thr = self._best_split(idx)
        if feat < 0:
            return node
        go_left = self.x[idx, feat] <= thr
        self.feature[node] = feat
        self.threshold[node] = thr
        self.left[node] = self.build(idx[go_left], depth + 1)
        self.right[node] = self.build(idx[~go_left], depth + 1)
        return node

    def _best_split(self, idx):
        """Minimum weighted Gini over midpoint thresholds of sampled features."""
        n_features = self.x.shape[1]
        feats = self.rng.choice(n_features, size=self.n_feat_split, replace=False)
        y = self.y[idx].astype(np.float64)
        n = len(idx)
        best = (np.inf, -1, 0.0)
        min_leaf = self.params.min_samples_leaf
        for f in np.sort(feats):
            v = self.x[idx, f]
            order = np.argsort(v, kind="stable")
            vs, ys = v[order], y[order]
            # candidate cut after position i (1-based count left); only at
            # boundaries between distinct values
            cum_pos = np.cumsum(ys)
            counts = np.arange(1, n + 1)
            boundary = np.nonzero(vs[:-1] < vs[1:])[0]  # cut between i and i+1
            if len(boundary) == 0:
                continue
            nl = counts[boundary].astype(np.float64)
            nr = n - nl
            pos_l = cum_pos[boundary]
            pos_r = cum_pos[-1] - pos_l
            ok = (nl >= min_leaf) & (nr >= min_leaf)
            if not ok.any():
                continue
            gini_l = 1.0 - (pos_l / nl) ** 2 - (1 - pos_l / nl) ** 2
            gini_r = 1.0 - (pos_r / nr) ** 2 - (1 - pos_r / nr) ** 2
            score = (nl * gini_l + nr * gini_r) / n
            score = np.where(ok, score, np.inf)
            j = int(np.argmin(score))
            if score[j] < best[0]:
                cut = boundary[j]
                best = (float(score[j]), int(f), float((vs[cut] + vs[cut + 1]) / 2.0))
        return best[1], best[2]


def _build_tree(x, y, params, n_feat_split, rng) -> DecisionTree:
    b = _TreeBuilder(x, y, params, n_feat_split, rng)
    b.build(np.arange(len(x)), 0)
    return DecisionTree(
        np.array(b.feature, dtype=np.int32),
        np.array(b.threshold, dtype=np.float64),
        np.array(b.left, dtype=np.int32),
        np.array(b.right, dtype=np.int32),
        np.array(b.prob, dtype=np.float64),
    )


def train_forest(x: np.ndarray, y: np.ndarray, params: ForestParams | None = None) -> Forest:
    """Train on feature rows x (n, F) with binary labels y (n,).

    Each tree sees a bootstrap sample drawn from rng seed
    (params.rng_seed + tree index), so training is deterministic.
    """
    params = params or ForestParams()
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y).astype(np.int8)
    if len(np.unique(y)) < 2:
        raise InsufficientLabelsError("need both foreground and background samples")
    f = x.shape[1]
    n_feat_split = params.features_per_split or int(np.ceil(np.sqrt(f)))
    n = len(x)
    trees = []
    for t in range(params.n_trees):
        rng = np.random.default_rng(params.rng_seed + t)
        boot = rng.integers(0, n, size=n)
        trees.append(_build_tree(x[boot], y[boot], params, n_feat_split, rng))
    return Forest(tuple(trees), params, n_features=f)


def train_forest_on_seeds(stack: FeatureStack, labels: np.ndarray,
                          params: ForestParams | None = None) -> Forest:
    """Interactive setting: training set = exactly the seeded pixels."""
    labels = np.asarray(labels)
    sel = (labels == FG_SEED) | (labels == BG_SEED)
    if not (labels == FG_SEED).any() or not (labels == BG_SEED).any():
        raise InsufficientLabelsError("need seeds of both classes")
    x = stack.matrix()[sel.ravel()]
    y = (labels[sel] == FG_SEED).astype(np.int8)
    return train_forest(x, y, params)


def predict_forest(forest: Forest, stack: FeatureStack) -> tuple[np.ndarray, BinaryMask]:
    """Mean of tree probabilities; mask = prob >= 0.5 (ties foreground)."""
    x = stack.matrix()
    if x.shape[1] != forest.n_features:
        raise FeatureMismatchError(
            f"stack has {x.shape[1]} features, forest trained on {forest.n_features}")
    prob = np.mean([t.predict(x) for t in forest.trees], axis=0)
    h, w = stack.shape
    return prob.reshape(h, w), BinaryMask((prob >= 0.5).reshape(h, w).astype(np.uint8))


def forest_to_json(forest: Forest) -> str:
    """Serialize with flattened node arrays (schema in README)."""
    return json.dumps({
        "params": {
            "n_trees": forest.params.n_trees,
            "max_depth": forest.params.max_depth,
            "min_samples_leaf": forest.params.min_samples_leaf,
            "features_per_split": forest.params.features_per_split,
            "rng_seed": forest.params.rng_seed,
        },
        "n_features": forest.n_features,
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "prob": t.prob.tolist(),
            }
            for t in forest.trees
        ],
    })


def forest_from_json(text: str) -> Forest:
    d = json.loads(text)
    params = ForestParams(**d["params"])
    trees = tuple(
        DecisionTree(
            np.array(t["feature"], dtype=np.int32),
            np.array(t["threshold"], dtype=np.float64),
            np.array(t["left"], dtype=np.int32),
            np.array(t["right"], dtype=np.int32),
            np.array(t["prob"], dtype=np.float64),
        )
        for t in d["trees"]
    )
    return Forest(trees, params, n_features=d["n_features"])
