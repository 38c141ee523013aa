/**
 * Wire schema for brush annotations, shared with the server.
 *
 * A stroke is a labeled polyline in *image* coordinates plus a brush radius;
 * the server rasterizes it, so the client never has to agree with the server
 * about disk shapes — only about the points themselves.
 */

export type StrokeLabel = "fg" | "bg";

export interface Stroke {
  label: StrokeLabel;
  radius: number;
  /** [x, y] pairs in image pixel coordinates. */
  points: [number, number][];
}

export interface Annotation {
  strokes: Stroke[];
}

/** Incrementally built stroke; points append as the pointer moves. */
export class StrokeBuilder {
  private points: [number, number][] = [];

  constructor(
    readonly label: StrokeLabel,
    readonly radius: number,
    private readonly width: number,
    private readonly height: number,
  ) {
    if (radius < 1 || !Number.isInteger(radius)) {
      throw new Error(`brush radius must be a positive integer, got ${radius}`);
    }
  }

  /**
   * Add an image-space point; out-of-image points clip to the image rect so a
   * drag across the border stays valid. Consecutive duplicates collapse.
   */
  add(x: number, y: number): void {
    const cx = clamp(Math.floor(x), 0, this.width - 1);
    const cy = clamp(Math.floor(y), 0, this.height - 1);
    const last = this.points[this.points.length - 1];
    if (last && last[0] === cx && last[1] === cy) return;
    this.points.push([cx, cy]);
  }

  get size(): number {
    return this.points.length;
  }

  finish(): Stroke {
    if (this.points.length === 0) {
      throw new Error("cannot finish a stroke with no points");
    }
    return { label: this.label, radius: this.radius, points: this.points.slice() };
  }
}

export function toAnnotation(strokes: Stroke[]): Annotation {
  return { strokes };
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(Math.max(v, lo), hi);
}
