"""HTTP API for live interactive segmentation sessions.

One session = one uploaded image (optional ground truth), an algorithm, a
scribble pool and a mask/metrics history with undo. Requests touching a
session serialize on a per-session lock; distinct sessions are independent.
"""

from __future__ import annotations

import base64
import io
import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Form, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from . import forest as ml
from .errors import SegbenchError, UnsupportedFormatError
from .graphcut import GraphCutParams, grabcut, graph_cut_segment
from .interact import auto_seeds
from .metrics import MetricsSnapshot, alpha_beta, iou, time_block
from .naive import histogram, otsu_threshold, region_grow, threshold_segment
from .raster import (
    BG_SEED,
    FG_SEED,
    Annotation,
    BinaryMask,
    Raster,
    load_image,
    load_mask,
    mask_to_png_bytes,
    rasterize,
    to_gray,
)

KNOWN_ALGORITHMS = ("graphcut", "grabcut", "region_grow", "ml_forest", "otsu")
SESSION_TTL_SECONDS = 60 * 60


@dataclass
class Session:
    id: str
    image: Raster
    gt: BinaryMask | None
    algorithm: str
    params: dict
    annotation: Annotation = field(default_factory=Annotation)
    masks: list = field(default_factory=list)
    metrics: list = field(default_factory=list)
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


def _segment(session: Session) -> BinaryMask:
    """Run the session's algorithm on (image, pool, previous mask as prior)."""
    img = session.image
    h, w = img.shape
    seeds = rasterize(session.annotation, w, h)
    algo = session.algorithm
    if algo == "otsu":
        g = to_gray(img)
        return threshold_segment(g, otsu_threshold(histogram(g)))
    if algo == "region_grow":
        if not (seeds == FG_SEED).any():
            raise _SeedError("region growing needs at least one foreground stroke")
        tau = float(session.params.get("tau", 25.0))
        return region_grow(to_gray(img), seeds, tau)
    if algo == "ml_forest":
        if not ((seeds == FG_SEED).any() and (seeds == BG_SEED).any()):
            raise _SeedError("random forest needs strokes of both classes")
        stack = ml.extract_features(img)
        params = ml.ForestParams(**session.params.get("forest", {"n_trees": 10, "max_depth": 8}))
        f = ml.train_forest_on_seeds(stack, seeds, params)
        _, mask = ml.predict_forest(f, stack)
        return mask
    if algo == "grabcut":
        if not ((seeds == FG_SEED).any() and (seeds == BG_SEED).any()):
            raise _SeedError("grabcut needs strokes of both classes")
        return grabcut(img, seeds, k=int(session.params.get("k", 5)))
    # graphcut: previous mask acts as a soft prior via eroded auto-seeds
    if session.masks:
        prior = auto_seeds(session.masks[-1], erosion_px=3)
        prior[seeds != 0] = seeds[seeds != 0]
        seeds = prior
    if not ((seeds == FG_SEED).any() and (seeds == BG_SEED).any()):
        raise _SeedError("graph cut needs strokes of both classes")
    return graph_cut_segment(img, seeds, GraphCutParams())


class _SeedError(SegbenchError):
    pass


def create_app(persist_dir=None, cors_origin=None, static_dir=None,
               ttl_seconds: int = SESSION_TTL_SECONDS) -> FastAPI:
    app = FastAPI(title="segbench session service")
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()
    persist = Path(persist_dir) if persist_dir else None
    if persist:
        persist.mkdir(parents=True, exist_ok=True)

    if cors_origin:
        app.add_middleware(
            CORSMiddleware, allow_origins=[cors_origin],
            allow_methods=["*"], allow_headers=["*"])

    def snapshot(s: Session) -> None:
        if not persist:
            return
        doc = {
            "id": s.id,
            "algorithm": s.algorithm,
            "params": s.params,
            "annotation": s.annotation.to_dict(),
            "image_png": base64.b64encode(_raster_png(s.image)).decode(),
            "gt_png": base64.b64encode(mask_to_png_bytes(s.gt)).decode() if s.gt else None,
            "masks_png": [base64.b64encode(mask_to_png_bytes(m)).decode() for m in s.masks],
            "metrics": [m.to_dict() for m in s.metrics],
            "created": s.created,
            "updated": s.updated,
        }
        (persist / f"{s.id}.json").write_text(json.dumps(doc))

    def restore(sid: str) -> Session | None:
        if not persist:
            return None
        path = persist / f"{sid}.json"
        if not path.exists():
            return None
        doc = json.loads(path.read_text())
        img = load_image(io.BytesIO(base64.b64decode(doc["image_png"])))
        gt = None
        if doc["gt_png"]:
            gt = load_mask(io.BytesIO(base64.b64decode(doc["gt_png"])))
        s = Session(doc["id"], img, gt, doc["algorithm"], doc["params"],
                    Annotation.from_dict(doc["annotation"]),
                    created=doc["created"], updated=doc["updated"])
        for b in doc["masks_png"]:
            s.masks.append(load_mask(io.BytesIO(base64.b64decode(b))))
        s.metrics = [MetricsSnapshot(**m) for m in doc["metrics"]]
        return s

    def _raster_png(img: Raster) -> bytes:
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(img.data).save(buf, format="PNG")
        return buf.getvalue()

    def evict_idle() -> None:
        now = time.time()
        with registry_lock:
            stale = [sid for sid, s in sessions.items() if now - s.updated > ttl_seconds]
            for sid in stale:
                del sessions[sid]

    def get_session(sid: str) -> Session:
        evict_idle()
        with registry_lock:
            s = sessions.get(sid)
            if s is None:
                s = restore(sid)
                if s is not None:
                    sessions[sid] = s
            if s is None:
                raise HTTPException(404, "unknown session")
            return s

    @app.post("/sessions", status_code=201)
    async def create_session(image: UploadFile, algorithm: str = Form(...),
                             gt: UploadFile | None = None, params: str = Form("{}")):
        if algorithm not in KNOWN_ALGORITHMS:
            raise HTTPException(
                422,
                f"unknown algorithm {algorithm!r}; known: {', '.join(KNOWN_ALGORITHMS)}."
                " Deep-learning models are served only through the benchmark harness's"
                " external mask manifests, not live sessions.")
        try:
            img = load_image(io.BytesIO(await image.read()))
        except (UnsupportedFormatError, Exception) as e:
            raise HTTPException(400, f"bad image: {e}")
        gt_mask = None
        if gt is not None:
            try:
                gt_mask = load_mask(io.BytesIO(await gt.read()))
            except Exception as e:
                raise HTTPException(400, f"bad ground truth: {e}")
            if gt_mask.shape != img.shape:
                raise HTTPException(
                    400, f"ground truth {gt_mask.shape} does not match image {img.shape}")
        try:
            params_dict = json.loads(params) if params else {}
        except json.JSONDecodeError as e:
            raise HTTPException(400, f"params is not valid JSON: {e}")
        sid = secrets.token_urlsafe(16)  # 128 bits
        s = Session(sid, img, gt_mask, algorithm, params_dict)
        with registry_lock:
            sessions[sid] = s
        snapshot(s)
        return {"session_id": sid, "width": img.width, "height": img.height,
                "has_gt": gt_mask is not None}

    @app.post("/sessions/{sid}/scribbles", status_code=204)
    def add_scribbles(sid: str, body: dict):
        s = get_session(sid)
        with s.lock:
            try:
                ann = Annotation.from_dict(body)
            except (KeyError, TypeError, ValueError) as e:
                raise HTTPException(400, f"bad annotation: {e}")
            for si, stroke in enumerate(ann.strokes):
                for pi, (x, y) in enumerate(stroke.points):
                    if not (0 <= x < s.image.width and 0 <= y < s.image.height):
                        raise HTTPException(
                            400, f"stroke {si} point {pi} ({x},{y}) outside image")
            for stroke in ann.strokes:
                s.annotation = s.annotation.with_stroke(stroke)
            s.updated = time.time()
            snapshot(s)
        return Response(status_code=204)

    @app.post("/sessions/{sid}/refine")
    def refine(sid: str):
        s = get_session(sid)
        with s.lock:
            try:
                mask, seconds = time_block(_segment, s)
            except _SeedError as e:
                raise HTTPException(409, str(e))
            except HTTPException:
                raise
            except Exception as e:  # noqa: BLE001
                err_id = secrets.token_hex(4)
                raise HTTPException(500, f"algorithm failed (error id {err_id}): {e}")
            m_iou = a = b = None
            if s.gt is not None:
                m_iou = iou(s.gt, mask)
                if s.gt.area() > 0:
                    a, b = alpha_beta(s.gt, mask)
            snap = MetricsSnapshot(iou=m_iou, alpha=a, beta=b,
                                   compute_seconds=round(seconds, 3),
                                   interaction_seconds=0.0)
            s.masks.append(mask)
            s.metrics.append(snap)
            s.updated = time.time()
            snapshot(s)
            return {"mask_png_base64": base64.b64encode(mask_to_png_bytes(mask)).decode(),
                    "metrics": snap.to_dict()}

    @app.post("/sessions/{sid}/undo")
    def undo(sid: str):
        s = get_session(sid)
        with s.lock:
            if not s.masks:
                raise HTTPException(409, "nothing to undo")
            s.masks.pop()
            s.metrics.pop()
            s.updated = time.time()
            snapshot(s)
            return {"depth": len(s.masks)}

    @app.get("/sessions/{sid}/mask")
    def get_mask(sid: str):
        s = get_session(sid)
        with s.lock:
            if not s.masks:
                raise HTTPException(409, "no mask yet; call refine first")
            return Response(mask_to_png_bytes(s.masks[-1]), media_type="image/png")

    @app.get("/sessions/{sid}/metrics")
    def get_metrics(sid: str):
        s = get_session(sid)
        with s.lock:
            return [m.to_dict() for m in s.metrics]

    @app.get("/sessions/{sid}")
    def get_state(sid: str):
        s = get_session(sid)
        with s.lock:
            return {
                "session_id": s.id,
                "algorithm": s.algorithm,
                "width": s.image.width,
                "height": s.image.height,
                "has_gt": s.gt is not None,
                "n_strokes": len(s.annotation.strokes),
                "n_masks": len(s.masks),
                "created": s.created,
                "updated": s.updated,
            }

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
