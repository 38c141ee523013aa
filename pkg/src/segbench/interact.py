"""The three human/algorithm interaction protocols with a simulated user.

The simulated user is a deterministic greedy policy: it always targets the
largest connected error region and places a brush stroke at its deepest
interior pixel, with the radius capped so the stroke never crosses the true
object boundary. Every session is reproducible given (image, gt, params).
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DegenerateGtError, DimensionMismatchError
from .graphcut import GraphCutParams, graph_cut_segment
from .metrics import iou, time_block
from .raster import (
    BG_SEED,
    FG_SEED,
    UNKNOWN,
    Annotation,
    BinaryMask,
    Raster,
    Stroke,
    mask_to_png_bytes,
    stroke_pixels,
)

_FOUR_CONN = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class SimulatedUserParams:
    brush_radius: int = 4
    seconds_per_interaction: float = 2.0
    max_interactions: int = 10
    target_iou: float = 0.95
    rng_seed: int = 0
    erosion_px: int = 3  # auto-seed erosion for re-refinement


@dataclass(frozen=True)
class InteractionEvent:
    index: int
    kind: str  # initial_seeding | correction | direct_paint
    annotation: Annotation
    simulated_time: float

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "kind": self.kind,
            "annotation": self.annotation.to_dict(),
            "simulated_time": self.simulated_time,
        }


@dataclass
class SessionRecord:
    image_id: str
    algorithm_id: str
    protocol_id: str
    events: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    compute_times: list = field(default_factory=list)
    iou_trace: list = field(default_factory=list)

    @property
    def initial_iou(self) -> float:
        return self.iou_trace[0]

    @property
    def refined_iou(self) -> float:
        return self.iou_trace[-1]

    @property
    def interaction_seconds(self) -> float:
        return sum(e.simulated_time for e in self.events)

    def to_dict(self, include_timings: bool = True) -> dict:
        d = {
            "image_id": self.image_id,
            "algorithm_id": self.algorithm_id,
            "protocol_id": self.protocol_id,
            "events": [e.to_dict() for e in self.events],
            "masks_png_base64": [
                base64.b64encode(mask_to_png_bytes(m)).decode() for m in self.masks
            ],
            "iou_trace": self.iou_trace,
            "initial_iou": self.initial_iou,
            "refined_iou": self.refined_iou,
            "interaction_seconds": self.interaction_seconds,
        }
        if include_timings:
            d["compute_times"] = self.compute_times
        return d


def _deepest_pixel(region: np.ndarray):
    """(y, x), taxicab depth at the row-major-first deepest pixel."""
    depth = ndimage.distance_transform_cdt(region, metric="taxicab")
    flat = int(np.argmax(depth))
    y, x = np.unravel_index(flat, region.shape)
    return int(y), int(x), int(depth[y, x])


def _safe_radius(safe_region: np.ndarray, y: int, x: int, cap: int) -> int:
    """Largest radius whose Euclidean disk at (x, y) stays inside safe_region."""
    edt = ndimage.distance_transform_edt(safe_region)
    r = int(np.floor(edt[y, x] - 1e-9))
    return max(1, min(cap, r))


def simulate_initial_seeds(gt: BinaryMask, p: SimulatedUserParams) -> Annotation:
    """One FG and one BG point stroke at the interior-most pixel of each class."""
    fg = gt.labels.astype(bool)
    if not fg.any() or fg.all():
        raise DegenerateGtError("ground truth must contain both classes")
    strokes = []
    for label, region in (("fg", fg), ("bg", ~fg)):
        y, x, depth = _deepest_pixel(region)
        radius = _safe_radius(region, y, x, min(p.brush_radius, max(depth - 1, 1)))
        strokes.append(Stroke(label, ((x, y),), radius))
    return Annotation(tuple(strokes))


def next_correction(gt: BinaryMask, current: BinaryMask, p: SimulatedUserParams,
                    index: int = 0) -> InteractionEvent | None:
    """Corrective stroke for the largest 4-connected error component.

    Returns None when the current mask already matches ground truth.
    """
    if gt.shape != current.shape:
        raise DimensionMismatchError(f"gt {gt.shape} vs current {current.shape}")
    errors = gt.labels != current.labels
    if not errors.any():
        return None
    lab, n = ndimage.label(errors, structure=_FOUR_CONN)
    sizes = ndimage.sum_labels(errors, lab, index=np.arange(1, n + 1))
    # ties: smallest label id == component seen first in row-major order
    comp = int(np.argmax(sizes)) + 1
    region = lab == comp
    y, x, depth = _deepest_pixel(region)
    label = "fg" if gt.labels[y, x] else "bg"
    safe = gt.labels.astype(bool) if label == "fg" else ~gt.labels.astype(bool)
    radius = _safe_radius(safe, y, x, min(p.brush_radius, max(depth, 1)))
    stroke = Stroke(label, ((x, y),), radius)
    return InteractionEvent(index, "correction", Annotation((stroke,)), p.seconds_per_interaction)


def clipped_seeds(ann: Annotation, gt: BinaryMask | None, shape, base: np.ndarray | None = None) -> np.ndarray:
    """Rasterize strokes onto a label raster, last writer wins.

    When gt is given, each stroke only marks pixels whose true label matches
    the stroke label (a careful user never paints across the true boundary).
    """
    h, w = shape
    out = np.full((h, w), UNKNOWN, dtype=np.uint8) if base is None else base.copy()
    for s in ann.strokes:
        cover = stroke_pixels(s, w, h)
        if gt is not None:
            want_fg = s.label == "fg"
            cover &= gt.labels.astype(bool) == want_fg
        out[cover] = FG_SEED if s.label == "fg" else BG_SEED
    return out


def paint_apply(mask: BinaryMask, ev: InteractionEvent, gt: BinaryMask) -> BinaryMask:
    """Write the stroke disks directly into the mask (clipped to true labels)."""
    out = mask.labels.copy()
    h, w = mask.shape
    for s in ev.annotation.strokes:
        cover = stroke_pixels(s, w, h)
        want_fg = s.label == "fg"
        cover &= gt.labels.astype(bool) == want_fg
        out[cover] = 1 if want_fg else 0
    return BinaryMask(out)


def auto_seeds(mask: BinaryMask, erosion_px: int) -> np.ndarray:
    """Stable prior for re-refinement: erode current FG/BG into seed bands."""
    fg = mask.labels.astype(bool)
    seeds = np.full(mask.shape, UNKNOWN, dtype=np.uint8)
    if erosion_px > 0:
        fg_core = ndimage.binary_erosion(fg, _FOUR_CONN, iterations=erosion_px)
        bg_core = ndimage.binary_erosion(~fg, _FOUR_CONN, iterations=erosion_px)
    else:
        fg_core, bg_core = fg, ~fg
    seeds[fg_core] = FG_SEED
    seeds[bg_core] = BG_SEED
    return seeds


def _has_both(seeds: np.ndarray) -> bool:
    return bool((seeds == FG_SEED).any() and (seeds == BG_SEED).any())


def _should_stop(rec: SessionRecord, p: SimulatedUserParams) -> bool:
    return rec.iou_trace[-1] >= p.target_iou or len(
        [e for e in rec.events if e.kind != "initial_seeding"]
    ) >= p.max_interactions


def run_algorithm_assists_user(segmenter, img: Raster, gt: BinaryMask,
                               p: SimulatedUserParams, refine_mode: str = "paint",
                               gc_params: GraphCutParams | None = None,
                               image_id: str = "", algorithm_id: str = "") -> SessionRecord:
    """Protocol 1: automatic initial mask, user corrections refine it.

    refine_mode "paint" writes strokes straight into the mask;
    "graphcut_refine" re-segments from accumulated strokes plus auto-seeds.
    """
    if refine_mode not in ("paint", "graphcut_refine"):
        raise ValueError(f"unknown refine_mode {refine_mode!r}")
    rec = SessionRecord(image_id, algorithm_id, f"algorithm_assists_user_{refine_mode}")
    mask, t = time_block(segmenter, img)
    rec.masks.append(mask)
    rec.compute_times.append(t)
    rec.iou_trace.append(iou(gt, mask))
    pool = Annotation()
    idx = 0
    while not _should_stop(rec, p):
        ev = next_correction(gt, rec.masks[-1], p, index=idx)
        if ev is None:
            break
        idx += 1
        rec.events.append(ev)
        pool = pool.with_stroke(ev.annotation.strokes[0])
        current = rec.masks[-1]
        if refine_mode == "paint":
            mask = paint_apply(current, ev, gt)
        else:
            seeds = clipped_seeds(pool, gt, gt.shape, base=auto_seeds(current, p.erosion_px))
            if _has_both(seeds):
                mask, t = time_block(graph_cut_segment, img, seeds, gc_params)
                rec.compute_times.append(t)
            else:
                mask = paint_apply(current, ev, gt)
        rec.masks.append(mask)
        rec.iou_trace.append(iou(gt, mask))
    return rec


def run_user_assists_algorithm(refiner, img: Raster, gt: BinaryMask,
                               p: SimulatedUserParams,
                               image_id: str = "", algorithm_id: str = "") -> SessionRecord:
    """Protocol 2: user seeds first, the algorithm segments from the seeds.

    refiner(img, seeds, prior_mask) -> BinaryMask. initial_iou is measured
    after the first refiner run (the first algorithmic mask).
    """
    rec = SessionRecord(image_id, algorithm_id, "user_assists_algorithm")
    pool = simulate_initial_seeds(gt, p)
    rec.events.append(InteractionEvent(0, "initial_seeding", pool, p.seconds_per_interaction))
    seeds = clipped_seeds(pool, gt, gt.shape)
    mask, t = time_block(refiner, img, seeds, None)
    rec.masks.append(mask)
    rec.compute_times.append(t)
    rec.iou_trace.append(iou(gt, mask))
    idx = 1
    while len(rec.events) < p.max_interactions and rec.iou_trace[-1] < p.target_iou:
        ev = next_correction(gt, rec.masks[-1], p, index=idx)
        if ev is None:
            break
        idx += 1
        rec.events.append(ev)
        pool = pool.with_stroke(ev.annotation.strokes[0])
        seeds = clipped_seeds(pool, gt, gt.shape)
        mask, t = time_block(refiner, img, seeds, rec.masks[-1])
        rec.masks.append(mask)
        rec.compute_times.append(t)
        rec.iou_trace.append(iou(gt, mask))
    return rec


def run_hybrid(segmenter, refiner, img: Raster, gt: BinaryMask,
               p: SimulatedUserParams,
               image_id: str = "", algorithm_id: str = "") -> SessionRecord:
    """Protocol 3: automatic initial mask, then stroke + re-segmentation loop.

    Each round the refiner sees the accumulated strokes plus auto-seeds
    derived from the current mask (soft prior).
    """
    rec = SessionRecord(image_id, algorithm_id, "hybrid")
    mask, t = time_block(segmenter, img)
    rec.masks.append(mask)
    rec.compute_times.append(t)
    rec.iou_trace.append(iou(gt, mask))
    pool = Annotation()
    idx = 0
    while not _should_stop(rec, p):
        ev = next_correction(gt, rec.masks[-1], p, index=idx)
        if ev is None:
            break
        idx += 1
        rec.events.append(ev)
        pool = pool.with_stroke(ev.annotation.strokes[0])
        current = rec.masks[-1]
        seeds = clipped_seeds(pool, gt, gt.shape, base=auto_seeds(current, p.erosion_px))
        if _has_both(seeds):
            mask, t = time_block(refiner, img, seeds, current)
            rec.compute_times.append(t)
        else:
            mask = paint_apply(current, ev, gt)
        rec.masks.append(mask)
        rec.iou_trace.append(iou(gt, mask))
    return rec
