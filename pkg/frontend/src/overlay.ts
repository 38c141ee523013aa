/**
 * Turn a server mask PNG (white = foreground) into a tinted RGBA overlay.
 *
 * Pixel recoloring happens on raw ImageData so the displayed foreground set is
 * exactly the server's: any pixel with value >= 128 is tinted, everything else
 * fully transparent.
 */

export interface Tint {
  r: number;
  g: number;
  b: number;
  /** 0..1 overlay opacity. */
  alpha: number;
}

export const DEFAULT_TINT: Tint = { r: 64, g: 160, b: 255, alpha: 0.45 };

export function tintMask(mask: ImageData, tint: Tint): ImageData {
  const out = new ImageData(mask.width, mask.height);
  const a = Math.round(tint.alpha * 255);
  for (let i = 0; i < mask.data.length; i += 4) {
    if (mask.data[i] >= 128) {
      out.data[i] = tint.r;
      out.data[i + 1] = tint.g;
      out.data[i + 2] = tint.b;
      out.data[i + 3] = a;
    }
  }
  return out;
}

/** Decode a base64 PNG into an ImageBitmap (browser only). */
export async function decodeBase64Png(b64: string): Promise<ImageBitmap> {
  const bytes = Uint8Array.from(atob(b64), (c) => c.charCodeAt(0));
  return createImageBitmap(new Blob([bytes], { type: "image/png" }));
}
