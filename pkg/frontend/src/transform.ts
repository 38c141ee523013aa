/**
 * Canvas <-> image coordinate mapping with zoom and pan.
 *
 * The canvas draws the image scaled by `scale` and shifted by (offsetX,
 * offsetY) in canvas pixels. Strokes live in image coordinates, so the wire
 * schema is resolution independent: painting image pixel (x, y) at any zoom
 * submits exactly (x, y).
 */

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export function identity(): ViewTransform {
  return { scale: 1, offsetX: 0, offsetY: 0 };
}

/** Canvas point -> continuous image coordinates (floor to get the pixel). */
export function canvasToImage(t: ViewTransform, cx: number, cy: number): [number, number] {
  return [(cx - t.offsetX) / t.scale, (cy - t.offsetY) / t.scale];
}

/** Top-left canvas position of an image pixel. */
export function imageToCanvas(t: ViewTransform, ix: number, iy: number): [number, number] {
  return [ix * t.scale + t.offsetX, iy * t.scale + t.offsetY];
}

/** Zoom about a fixed canvas point so the pixel under the cursor stays put. */
export function zoomAt(t: ViewTransform, cx: number, cy: number, factor: number): ViewTransform {
  const scale = clampScale(t.scale * factor);
  const applied = scale / t.scale;
  return {
    scale,
    offsetX: cx - (cx - t.offsetX) * applied,
    offsetY: cy - (cy - t.offsetY) * applied,
  };
}

export function pan(t: ViewTransform, dx: number, dy: number): ViewTransform {
  return { ...t, offsetX: t.offsetX + dx, offsetY: t.offsetY + dy };
}

/** Fit the whole image into a canvas, centered. */
export function fit(imgW: number, imgH: number, canvasW: number, canvasH: number): ViewTransform {
  const scale = clampScale(Math.min(canvasW / imgW, canvasH / imgH));
  return {
    scale,
    offsetX: (canvasW - imgW * scale) / 2,
    offsetY: (canvasH - imgH * scale) / 2,
  };
}

function clampScale(s: number): number {
  return Math.min(Math.max(s, 0.125), 64);
}
