/**
 * DOM wiring for the annotator: canvas painting, toolbar, metrics panel.
 *
 * All session logic lives in SessionStore; this file only translates pointer
 * events into image-space strokes and renders state changes.
 */

import { StrokeBuilder, StrokeLabel } from "./annotation.js";
import { ApiClient } from "./api.js";
import { DEFAULT_TINT, decodeBase64Png, tintMask } from "./overlay.js";
import { SessionStore } from "./state.js";
import { ViewTransform, canvasToImage, fit, identity, pan, zoomAt } from "./transform.js";

const api = new ApiClient("");
const store = new SessionStore(api);

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const fileInput = document.getElementById("image-file") as HTMLInputElement;
const gtInput = document.getElementById("gt-file") as HTMLInputElement;
const algoSelect = document.getElementById("algorithm") as HTMLSelectElement;
const openBtn = document.getElementById("open") as HTMLButtonElement;
const refineBtn = document.getElementById("refine") as HTMLButtonElement;
const undoBtn = document.getElementById("undo") as HTMLButtonElement;
const radiusInput = document.getElementById("radius") as HTMLInputElement;
const hintBox = document.getElementById("hint") as HTMLElement;
const traceBox = document.getElementById("trace") as HTMLElement;

let imageBitmap: ImageBitmap | null = null;
let overlayCanvas: HTMLCanvasElement | null = null;
let view: ViewTransform = identity();
let activeStroke: StrokeBuilder | null = null;
let activeLabel: StrokeLabel = "fg";
let panning = false;
let lastPointer: [number, number] = [0, 0];

for (const id of ["tool-fg", "tool-bg"] as const) {
  document.getElementById(id)!.addEventListener("click", () => {
    activeLabel = id === "tool-fg" ? "fg" : "bg";
    document.getElementById("tool-fg")!.classList.toggle("active", activeLabel === "fg");
    document.getElementById("tool-bg")!.classList.toggle("active", activeLabel === "bg");
  });
}

openBtn.addEventListener("click", async () => {
  const file = fileInput.files?.[0];
  if (!file) {
    hintBox.textContent = "choose an image first";
    return;
  }
  try {
    await store.open(file, algoSelect.value, gtInput.files?.[0] ?? undefined);
    imageBitmap = await createImageBitmap(file);
    overlayCanvas = null;
    view = fit(imageBitmap.width, imageBitmap.height, canvas.width, canvas.height);
    render();
  } catch (err) {
    hintBox.textContent = err instanceof Error ? err.message : String(err);
  }
});

refineBtn.addEventListener("click", () => void store.refine());
undoBtn.addEventListener("click", () => void store.undo());

canvas.addEventListener("pointerdown", (ev) => {
  if (!imageBitmap) return;
  canvas.setPointerCapture(ev.pointerId);
  if (ev.button === 1 || ev.shiftKey) {
    panning = true;
    lastPointer = [ev.offsetX, ev.offsetY];
    return;
  }
  const s = store.getState();
  activeStroke = new StrokeBuilder(
    activeLabel,
    Math.max(1, Math.round(Number(radiusInput.value))),
    s.width,
    s.height,
  );
  const [ix, iy] = canvasToImage(view, ev.offsetX, ev.offsetY);
  activeStroke.add(ix, iy);
  render();
});

canvas.addEventListener("pointermove", (ev) => {
  if (panning) {
    view = pan(view, ev.offsetX - lastPointer[0], ev.offsetY - lastPointer[1]);
    lastPointer = [ev.offsetX, ev.offsetY];
    render();
    return;
  }
  if (!activeStroke) return;
  const [ix, iy] = canvasToImage(view, ev.offsetX, ev.offsetY);
  activeStroke.add(ix, iy);
  render();
});

canvas.addEventListener("pointerup", () => {
  panning = false;
  if (activeStroke && activeStroke.size > 0) {
    store.addStroke(activeStroke.finish());
  }
  activeStroke = null;
});

canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  view = zoomAt(view, ev.offsetX, ev.offsetY, ev.deltaY < 0 ? 1.2 : 1 / 1.2);
  render();
});

store.subscribe((s) => {
  refineBtn.disabled = s.busy || !s.sessionId;
  undoBtn.disabled = s.busy || s.maskHistory.length === 0;
  hintBox.textContent = s.hint ?? "";
  traceBox.textContent = s.metricsTrace
    .map((m, i) => {
      const iou = m.iou === null ? "—" : m.iou.toFixed(4);
      return s.hasGt
        ? `#${i + 1}  iou ${iou}  (${m.compute_seconds}s)`
        : `#${i + 1}  ${m.compute_seconds}s`;
    })
    .join("\n");
  void refreshOverlay(s.sessionId ? store.currentMask() : null);
});

async function refreshOverlay(maskB64: string | null): Promise<void> {
  if (!maskB64) {
    overlayCanvas = null;
    render();
    return;
  }
  const bitmap = await decodeBase64Png(maskB64);
  const off = document.createElement("canvas");
  off.width = bitmap.width;
  off.height = bitmap.height;
  const octx = off.getContext("2d")!;
  octx.drawImage(bitmap, 0, 0);
  octx.putImageData(tintMask(octx.getImageData(0, 0, off.width, off.height), DEFAULT_TINT), 0, 0);
  overlayCanvas = off;
  render();
}

function render(): void {
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!imageBitmap) return;
  ctx.save();
  ctx.imageSmoothingEnabled = false;
  ctx.setTransform(view.scale, 0, 0, view.scale, view.offsetX, view.offsetY);
  ctx.drawImage(imageBitmap, 0, 0);
  if (overlayCanvas) ctx.drawImage(overlayCanvas, 0, 0);
  drawStrokes();
  ctx.restore();
}

function drawStrokes(): void {
  const strokes = [...store.getState().pendingStrokes];
  if (activeStroke && activeStroke.size > 0) {
    strokes.push(activeStroke.finish()); // preview of the stroke being drawn
  }
  ctx.globalAlpha = 0.6;
  for (const stroke of strokes) {
    ctx.fillStyle = stroke.label === "fg" ? "#2ecc71" : "#e74c3c";
    for (const [x, y] of stroke.points) {
      ctx.beginPath();
      ctx.arc(x + 0.5, y + 0.5, stroke.radius, 0, 2 * Math.PI);
      ctx.fill();
    }
  }
  ctx.globalAlpha = 1;
}
