import { describe, expect, it } from "vitest";

import { canvasToImage, fit, identity, imageToCanvas, pan, zoomAt } from "./transform.js";

describe("coordinate mapping", () => {
  it("is the identity at scale 1 with no offset", () => {
    expect(canvasToImage(identity(), 13, 7)).toEqual([13, 7]);
  });

  it("round-trips through imageToCanvas at any zoom", () => {
    let t = identity();
    t = zoomAt(t, 100, 80, 3.7);
    t = pan(t, -25, 12);
    for (const [ix, iy] of [
      [0, 0],
      [17, 42],
      [63, 63],
    ]) {
      const [cx, cy] = imageToCanvas(t, ix, iy);
      const [bx, by] = canvasToImage(t, cx, cy);
      expect(bx).toBeCloseTo(ix, 9);
      expect(by).toBeCloseTo(iy, 9);
    }
  });

  it("submits the same image pixel regardless of zoom", () => {
    // painting image pixel (20, 30): find its canvas center at two zooms and
    // map back; flooring must give (20, 30) both times
    for (const factor of [1, 5]) {
      const t = zoomAt(identity(), 0, 0, factor);
      const [cx, cy] = imageToCanvas(t, 20.5, 30.5);
      const [ix, iy] = canvasToImage(t, cx, cy);
      expect([Math.floor(ix), Math.floor(iy)]).toEqual([20, 30]);
    }
  });

  it("zoomAt keeps the pixel under the cursor fixed", () => {
    const t0 = pan(zoomAt(identity(), 50, 50, 2), 10, -5);
    const [ix, iy] = canvasToImage(t0, 120, 90);
    const t1 = zoomAt(t0, 120, 90, 1.6);
    const [ix2, iy2] = canvasToImage(t1, 120, 90);
    expect(ix2).toBeCloseTo(ix, 9);
    expect(iy2).toBeCloseTo(iy, 9);
  });

  it("fit centers the image and fills the limiting dimension", () => {
    const t = fit(64, 32, 640, 640);
    expect(t.scale).toBe(10);
    expect(t.offsetX).toBe(0);
    expect(t.offsetY).toBe((640 - 320) / 2);
  });
});
