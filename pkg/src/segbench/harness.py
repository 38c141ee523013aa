"""Dataset generation, the algorithm/protocol run matrix and report export."""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import forest as ml
from .errors import (
    ConfigError,
    DimensionMismatchError,
    EmptyResultsError,
    MissingMaskError,
)
from .graphcut import GraphCutParams, grabcut, graph_cut_segment
from .interact import (
    SimulatedUserParams,
    run_algorithm_assists_user,
    run_hybrid,
    run_user_assists_algorithm,
)
from .metrics import alpha_beta, iou_improvement
from .naive import canny, edges_to_mask, histogram, otsu_threshold, region_grow, threshold_segment
from .raster import BG_SEED, FG_SEED, BinaryMask, Raster, load_image, load_mask, save_image, save_mask, to_gray

DEFAULT_SYNTHETIC = {
    "n_images": 10,
    "size": 64,
    "shapes": ["disk"],
    "fg_intensity": 200,
    "bg_intensity": 30,
    "noise_sigma": 10.0,
    "rng_seed": 0,
}

COLORED_DISK_SPEC = {
    "n_images": 10,
    "size": 64,
    "shapes": ["disk"],
    "fg_color": [200, 40, 40],
    "bg_color": [30, 30, 120],
    "noise_sigma": 8.0,
    "rng_seed": 0,
}


# ---------------------------------------------------------------------------
# synthetic dataset generation

def _draw_shape(shape: str, size: int, rng: np.random.Generator) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size]
    if shape == "disk":
        r = int(rng.integers(size // 6, size // 3))
        cx = int(rng.integers(r + 2, size - r - 2))
        cy = int(rng.integers(r + 2, size - r - 2))
        return (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
    if shape == "rectangle":
        w = int(rng.integers(size // 4, size // 2))
        h = int(rng.integers(size // 4, size // 2))
        x0 = int(rng.integers(1, size - w - 1))
        y0 = int(rng.integers(1, size - h - 1))
        out = np.zeros((size, size), dtype=bool)
        out[y0 : y0 + h, x0 : x0 + w] = True
        return out
    if shape == "blob":
        from scipy import ndimage

        noise = rng.standard_normal((size, size))
        smooth = ndimage.gaussian_filter(noise, sigma=size / 8.0)
        blob = smooth > np.quantile(smooth, 0.8)
        lab, n = ndimage.label(blob)
        if n == 0:
            return _draw_shape("disk", size, rng)
        sizes = ndimage.sum_labels(blob, lab, index=np.arange(1, n + 1))
        return lab == (int(np.argmax(sizes)) + 1)
    raise ConfigError(f"unknown shape {shape!r}")


def generate_synthetic_dataset(spec: dict, out_dir) -> dict:
    """Write img_XXX.png / gt_XXX.png pairs plus manifest.json.

    Deterministic under spec['rng_seed']; returns the manifest dict.
    """
    spec = {**DEFAULT_SYNTHETIC, **spec}
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    size = int(spec["size"])
    color = "fg_color" in spec or "bg_color" in spec
    entries = []
    for i in range(int(spec["n_images"])):
        rng = np.random.default_rng(int(spec["rng_seed"]) + i)
        shape = spec["shapes"][i % len(spec["shapes"])]
        gt = _draw_shape(shape, size, rng)
        if color:
            fg = np.array(spec.get("fg_color", [200, 200, 200]), dtype=np.float64)
            bg = np.array(spec.get("bg_color", [30, 30, 30]), dtype=np.float64)
            img = np.where(gt[:, :, None], fg[None, None, :], bg[None, None, :])
        else:
            img = np.where(gt, float(spec["fg_intensity"]), float(spec["bg_intensity"]))
        sigma = float(spec.get("noise_sigma", 0.0))
        if sigma > 0:
            img = img + rng.normal(0.0, sigma, img.shape)
        raster = Raster(np.clip(np.rint(img), 0, 255).astype(np.uint8))
        img_name = f"img_{i:03d}.png"
        gt_name = f"gt_{i:03d}.png"
        save_image(raster, out / img_name)
        save_mask(BinaryMask(gt.astype(np.uint8)), out / gt_name)
        entries.append({"id": f"{i:03d}", "image": img_name, "gt": gt_name, "shape": shape})
    manifest = {"images": entries, "spec": spec}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest


def load_dataset(path) -> list[tuple[str, Raster, BinaryMask]]:
    """Load (id, image, gt) triples from a dataset directory's manifest."""
    root = Path(path)
    manifest = json.loads((root / "manifest.json").read_text())
    out = []
    for e in manifest["images"]:
        img = load_image(root / e["image"])
        gt = load_mask(root / e["gt"], expect_shape=img.shape)
        out.append((e["id"], img, gt))
    return out


# ---------------------------------------------------------------------------
# external (deep-learning stand-in) mask provider

def load_external_masks(manifest: dict, dataset) -> dict[str, BinaryMask]:
    """Validate and preload a {image id -> mask path} manifest.

    Fails fast at matrix-build time on missing entries/files or dimension
    mismatches; the matrix then serves masks from memory.
    """
    masks = {}
    by_id = {image_id: img for image_id, img, _ in dataset}
    for image_id, img in by_id.items():
        path = manifest.get("masks", {}).get(image_id)
        if path is None or not Path(path).exists():
            raise MissingMaskError(f"no external mask for image {image_id}")
        m = load_mask(path)
        if m.shape != img.shape:
            raise DimensionMismatchError(
                f"external mask for {image_id}: {m.shape} != image {img.shape}")
        masks[image_id] = m
    return masks


# ---------------------------------------------------------------------------
# algorithm registry

@dataclass(frozen=True)
class Algorithm:
    """A matrix cell's segmenter: automatic initial and/or seed-driven refine."""

    id: str
    kind: str
    initial: object = None  # f(img, gt, rng) -> BinaryMask
    refiner: object = None  # f(img, seeds, prior_mask) -> BinaryMask
    external: bool = False


def _otsu_segment(img: Raster) -> BinaryMask:
    g = to_gray(img)
    return threshold_segment(g, otsu_threshold(histogram(g)))


def build_algorithm(entry: dict, external_masks=None) -> Algorithm:
    kind = entry.get("kind")
    aid = entry.get("id", kind)
    params = entry.get("params", {})
    if kind == "naive_otsu":
        return Algorithm(aid, kind, initial=lambda img, gt, rng: _otsu_segment(img))
    if kind == "naive_canny":
        sigma = params.get("sigma", 1.0)
        low = params.get("low", 30.0)
        high = params.get("high", 90.0)

        def canny_initial(img, gt, rng):
            return edges_to_mask(canny(to_gray(img), sigma, low, high))

        return Algorithm(aid, kind, initial=canny_initial)
    if kind == "naive_regiongrow":
        tau = params.get("tau", 25.0)
        return Algorithm(
            aid, kind, refiner=lambda img, seeds, prior: region_grow(to_gray(img), seeds, tau))
    if kind == "graphcut":
        gc = GraphCutParams(**params)
        return Algorithm(
            aid, kind, refiner=lambda img, seeds, prior: graph_cut_segment(img, seeds, gc))
    if kind == "grabcut":
        k = params.get("k", 5)
        max_rounds = params.get("max_rounds", 5)
        gc = GraphCutParams(**params.get("gc", {}))

        def grabcut_refine(img, seeds, prior):
            return grabcut(img, seeds, k=k, params=gc, max_rounds=max_rounds)

        return Algorithm(aid, kind, refiner=grabcut_refine)
    if kind == "ml_forest":
        fp = ml.ForestParams(**{k: v for k, v in params.items() if k != "samples_per_class"})
        spc = params.get("samples_per_class", 2000)

        def forest_initial(img, gt, rng):
            # batch setting: train on an rng-seeded subsample of ground truth
            stack = ml.extract_features(img)
            flat_gt = gt.labels.ravel().astype(bool)
            x = stack.matrix()
            rows, labels = [], []
            for cls, sel in ((1, flat_gt), (0, ~flat_gt)):
                idx = np.nonzero(sel)[0]
                take = min(spc, len(idx))
                pick = rng.choice(idx, size=take, replace=False)
                rows.append(x[np.sort(pick)])
                labels.append(np.full(take, cls, dtype=np.int8))
            f = ml.train_forest(np.concatenate(rows), np.concatenate(labels), fp)
            _, mask = ml.predict_forest(f, stack)
            return mask

        def forest_refine(img, seeds, prior):
            stack = ml.extract_features(img)
            f = ml.train_forest_on_seeds(stack, seeds, fp)
            _, mask = ml.predict_forest(f, stack)
            return mask

        return Algorithm(aid, kind, initial=forest_initial, refiner=forest_refine)
    if kind == "external":
        if external_masks is None:
            raise ConfigError(f"algorithm {aid}: external kind needs an external_masks manifest")

        def external_initial(img, gt, rng, _masks=external_masks, _aid=aid):
            raise MissingMaskError(_aid)  # replaced per-image at matrix build

        return Algorithm(aid, kind, initial=external_initial, external=True)
    raise ConfigError(f"unknown algorithm kind {kind!r}")


# ---------------------------------------------------------------------------
# run matrix

def _cell_seed(base_seed: int, alg_id: str, protocol_id: str, image_id: str) -> int:
    digest = hashlib.sha256(f"{base_seed}|{alg_id}|{protocol_id}|{image_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _default_refiner():
    gc = GraphCutParams()
    return lambda img, seeds, prior: graph_cut_segment(img, seeds, gc)


def run_cell(alg: Algorithm, protocol: dict, image_id: str, img: Raster, gt: BinaryMask,
             user: SimulatedUserParams, base_seed: int,
             external_masks: dict | None = None):
    """Run one (algorithm, protocol, image) cell; returns a SessionRecord."""
    pid = protocol["id"]
    seed = _cell_seed(base_seed, alg.id, pid, image_id)
    rng = np.random.default_rng(seed)
    user = SimulatedUserParams(
        brush_radius=user.brush_radius,
        seconds_per_interaction=user.seconds_per_interaction,
        max_interactions=user.max_interactions,
        target_iou=user.target_iou,
        rng_seed=seed,
        erosion_px=user.erosion_px,
    )
    if alg.external:
        mask = external_masks[image_id]
        segmenter = lambda _img: mask  # noqa: E731
    elif alg.initial is not None:
        segmenter = lambda _img: alg.initial(_img, gt, rng)  # noqa: E731
    else:
        segmenter = None

    if pid == "algorithm_assists_user":
        if segmenter is None:
            raise ConfigError(f"{alg.id} has no automatic segmenter for {pid}")
        mode = protocol.get("mode", "paint")
        rec = run_algorithm_assists_user(
            segmenter, img, gt, user, refine_mode=mode,
            image_id=image_id, algorithm_id=alg.id)
        rec.protocol_id = f"{pid}_{mode}"
        return rec
    if pid == "user_assists_algorithm":
        if alg.refiner is None:
            raise ConfigError(f"{alg.id} has no seed-driven refiner for {pid}")
        return run_user_assists_algorithm(
            alg.refiner, img, gt, user, image_id=image_id, algorithm_id=alg.id)
    if pid == "hybrid":
        refiner = alg.refiner or _default_refiner()
        if segmenter is None:
            # seed-only algorithm: initial mask comes from simulated seeds
            from .interact import clipped_seeds, simulate_initial_seeds

            def seeded_initial(_img):
                ann = simulate_initial_seeds(gt, user)
                return refiner(_img, clipped_seeds(ann, gt, gt.shape), None)

            segmenter = seeded_initial
        return run_hybrid(segmenter, refiner, img, gt, user,
                          image_id=image_id, algorithm_id=alg.id)
    raise ConfigError(f"unknown protocol {pid!r}")


@dataclass
class RunSummary:
    rows: list = field(default_factory=list)
    alpha_beta_points: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rows": self.rows,
            "alpha_beta": self.alpha_beta_points,
            "failures": self.failures,
        }


def _quartiles(values) -> dict:
    v = np.asarray(sorted(values), dtype=np.float64)
    q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return {"min": q[0], "q1": q[1], "median": q[2], "q3": q[3], "max": q[4]}


def summarize(records, failures=None) -> RunSummary:
    """Aggregate session records into per-algorithm summary rows."""
    summary = RunSummary(failures=list(failures or []))
    by_alg: dict[str, list] = {}
    for rec, gt in records:
        by_alg.setdefault(rec.algorithm_id, []).append((rec, gt))
    for aid in sorted(by_alg):
        recs = by_alg[aid]
        initials = [r.initial_iou for r, _ in recs]
        refineds = [r.refined_iou for r, _ in recs]
        summary.rows.append({
            "algorithm": aid,
            "n_images": len({r.image_id for r, _ in recs}),
            "iou_improvement": float(np.mean([iou_improvement(r) for r, _ in recs])),
            "initial_iou_mean": float(np.mean(initials)),
            "refined_iou_mean": float(np.mean(refineds)),
            "compute_s_mean": float(np.mean([sum(r.compute_times) for r, _ in recs])),
            "interaction_s_mean": float(np.mean([r.interaction_seconds for r, _ in recs])),
            "initial_iou_quartiles": _quartiles(initials),
            "refined_iou_quartiles": _quartiles(refineds),
        })
        for rec, gt in recs:
            if gt.area() > 0:
                a, b = alpha_beta(gt, rec.masks[-1])
                summary.alpha_beta_points.append(
                    {"algorithm": aid, "image": rec.image_id, "alpha": a, "beta": b})
    return summary


def _max_workers(cfg_workers=None) -> int:
    env = os.environ.get("SEGBENCH_THREADS")
    n = int(env) if env else (cfg_workers or os.cpu_count() or 1)
    return max(1, n)


def run_matrix(cfg: dict):
    """Execute every (algorithm, protocol, image) cell of the config.

    Per-cell rng seeds derive from (rng_seed, algorithm, protocol, image) so
    results do not depend on execution order or pool size. Cell failures are
    recorded and do not abort the rest of the matrix.

    Returns (records, summary) where records is a list of
    (SessionRecord, gt mask) sorted by (algorithm, protocol, image).
    """
    dataset_cfg = cfg.get("dataset")
    if not dataset_cfg:
        raise ConfigError("config needs a dataset")
    if "synthetic" in dataset_cfg:
        out_dir = dataset_cfg.get("out_dir") or str(Path(cfg.get("output_dir", ".")) / "dataset")
        generate_synthetic_dataset(dataset_cfg["synthetic"], out_dir)
        dataset = load_dataset(out_dir)
    else:
        dataset = load_dataset(dataset_cfg["path"])
    if not dataset:
        raise ConfigError("dataset is empty")

    algorithms_cfg = cfg.get("algorithms") or []
    protocols = cfg.get("protocols") or []
    if not algorithms_cfg or not protocols:
        raise ConfigError("config needs at least one algorithm and one protocol")
    ids = [a.get("id", a.get("kind")) for a in algorithms_cfg]
    if len(set(ids)) != len(ids):
        raise ConfigError("algorithm ids must be unique")

    ext_cfg = cfg.get("external_masks")
    external_masks = None
    if any(a.get("kind") == "external" for a in algorithms_cfg):
        if not ext_cfg:
            raise ConfigError("external algorithm requires an external_masks manifest")
        external_masks = load_external_masks(ext_cfg, dataset)
    algorithms = [build_algorithm(a, external_masks=ext_cfg) for a in algorithms_cfg]

    user = SimulatedUserParams(**cfg.get("user", {}))
    base_seed = int(cfg.get("rng_seed", 0))

    cells = [
        (alg, protocol, image_id, img, gt)
        for alg in algorithms
        for protocol in protocols
        for image_id, img, gt in dataset
    ]

    def work(cell):
        alg, protocol, image_id, img, gt = cell
        try:
            rec = run_cell(alg, protocol, image_id, img, gt, user, base_seed,
                           external_masks=external_masks)
            return (alg.id, protocol["id"], image_id), (rec, gt), None
        except Exception as e:  # noqa: BLE001 - cell failures are data
            return (alg.id, protocol["id"], image_id), None, f"{type(e).__name__}: {e}"

    results = []
    with concurrent.futures.ThreadPoolExecutor(_max_workers(cfg.get("workers"))) as pool:
        results = list(pool.map(work, cells))
    results.sort(key=lambda r: r[0])
    records = [payload for _, payload, err in results if err is None]
    failures = [
        {"algorithm": key[0], "protocol": key[1], "image": key[2], "error": err}
        for key, _, err in results
        if err is not None
    ]
    summary = summarize(records, failures)
    return records, summary


# ---------------------------------------------------------------------------
# report export

SUMMARY_COLUMNS = ("algorithm", "n_images", "iou_improvement", "initial_iou_mean",
                   "refined_iou_mean", "compute_s_mean", "interaction_s_mean")


def export_reports(records, summary: RunSummary, out_dir) -> list[Path]:
    """Write summary.csv/.json, per-session records and plot-ready CSVs."""
    if not records:
        raise EmptyResultsError("no session records to export")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "summary.csv"
    with path.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SUMMARY_COLUMNS)
        for row in summary.rows:
            w.writerow([
                row["algorithm"], row["n_images"],
                *(f"{row[c]:.6f}" for c in SUMMARY_COLUMNS[2:]),
            ])
    written.append(path)

    path = out / "summary.json"
    path.write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
    written.append(path)

    rec_dir = out / "records"
    rec_dir.mkdir(exist_ok=True)
    for rec, _ in records:
        p = rec_dir / f"{rec.algorithm_id}__{rec.protocol_id}__{rec.image_id}.json"
        p.write_text(json.dumps(rec.to_dict(), indent=2, sort_keys=True))
        written.append(p)

    for name, key in (("boxplot_initial.csv", "initial_iou_quartiles"),
                      ("boxplot_refined.csv", "refined_iou_quartiles")):
        path = out / name
        with path.open("w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["algorithm", "min", "q1", "median", "q3", "max"])
            for row in summary.rows:
                q = row[key]
                w.writerow([row["algorithm"],
                            *(f"{q[c]:.6f}" for c in ("min", "q1", "median", "q3", "max"))])
        written.append(path)

    path = out / "alpha_beta.csv"
    with path.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["algorithm", "image", "alpha", "beta"])
        for pt in summary.alpha_beta_points:
            w.writerow([pt["algorithm"], pt["image"], f"{pt['alpha']:.6f}", f"{pt['beta']:.6f}"])
    written.append(path)
    return written


DEFAULT_RUN_CONFIG = {
    "dataset": {"synthetic": DEFAULT_SYNTHETIC},
    "algorithms": [
        {"id": "naive_cv", "kind": "naive_otsu"},
        {"id": "ml", "kind": "ml_forest", "params": {"n_trees": 10, "max_depth": 8}},
        {"id": "graphcut", "kind": "graphcut"},
    ],
    "protocols": [{"id": "hybrid"}],
    "user": {},
    "rng_seed": 0,
}
