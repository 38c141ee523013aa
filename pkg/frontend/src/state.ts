/**
 * Session state machine behind the UI, independent of the DOM.
 *
 * Owns pending strokes, the mask/metrics history mirror and the refine cycle.
 * Invariants it enforces:
 *  - pending strokes clear only after the server accepted them;
 *  - a failed refine (including insufficient-seeds 409) keeps pending strokes
 *    so the user can add more and retry;
 *  - at most one refine is in flight at a time;
 *  - the client never fabricates masks — every overlay comes from the server.
 */

import type { Stroke } from "./annotation.js";
import { toAnnotation } from "./annotation.js";
import { ApiClient, ApiError, MetricsSnapshot } from "./api.js";

export interface SessionState {
  sessionId: string | null;
  width: number;
  height: number;
  hasGt: boolean;
  pendingStrokes: Stroke[];
  /** base64 PNG of every server mask, newest last; mirrors the undo stack. */
  maskHistory: string[];
  metricsTrace: MetricsSnapshot[];
  busy: boolean;
  hint: string | null;
}

export type Listener = (s: SessionState) => void;

export class SessionStore {
  private state: SessionState = emptyState();
  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  getState(): SessionState {
    return this.state;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  async open(image: Blob, algorithm: string, gt?: Blob): Promise<void> {
    const info = await this.api.createSession(image, algorithm, gt);
    this.set({
      ...emptyState(),
      sessionId: info.session_id,
      width: info.width,
      height: info.height,
      hasGt: info.has_gt,
    });
  }

  addStroke(stroke: Stroke): void {
    this.set({
      ...this.state,
      pendingStrokes: [...this.state.pendingStrokes, stroke],
      hint: null,
    });
  }

  clearPending(): void {
    this.set({ ...this.state, pendingStrokes: [] });
  }

  /**
   * Submit pending strokes (if any), then refine. On success the pending pool
   * clears and the new mask/metrics append; on any error the pool is retained
   * and the failure surfaces as a hint instead of lost work.
   */
  async refine(): Promise<boolean> {
    const { sessionId, busy, pendingStrokes } = this.state;
    if (!sessionId || busy) return false;
    this.set({ ...this.state, busy: true, hint: null });
    try {
      if (pendingStrokes.length > 0) {
        await this.api.postScribbles(sessionId, toAnnotation(pendingStrokes));
      }
      const result = await this.api.refine(sessionId);
      this.set({
        ...this.state,
        busy: false,
        pendingStrokes: [],
        maskHistory: [...this.state.maskHistory, result.mask_png_base64],
        metricsTrace: [...this.state.metricsTrace, result.metrics],
      });
      return true;
    } catch (err) {
      this.set({ ...this.state, busy: false, hint: hintFor(err) });
      return false;
    }
  }

  /** Pop one mask/metrics entry on both server and client. */
  async undo(): Promise<boolean> {
    const { sessionId, busy } = this.state;
    if (!sessionId || busy) return false;
    this.set({ ...this.state, busy: true, hint: null });
    try {
      const { depth } = await this.api.undo(sessionId);
      this.set({
        ...this.state,
        busy: false,
        maskHistory: this.state.maskHistory.slice(0, depth),
        metricsTrace: this.state.metricsTrace.slice(0, depth),
      });
      return true;
    } catch (err) {
      this.set({ ...this.state, busy: false, hint: hintFor(err) });
      return false;
    }
  }

  currentMask(): string | null {
    const h = this.state.maskHistory;
    return h.length > 0 ? h[h.length - 1] : null;
  }

  private set(next: SessionState): void {
    this.state = next;
    for (const fn of this.listeners) fn(next);
  }
}

export function emptyState(): SessionState {
  return {
    sessionId: null,
    width: 0,
    height: 0,
    hasGt: false,
    pendingStrokes: [],
    maskHistory: [],
    metricsTrace: [],
    busy: false,
    hint: null,
  };
}

function hintFor(err: unknown): string {
  if (err instanceof ApiError) {
    if (err.status === 409) return err.detail; // e.g. "graph cut needs strokes of both classes"
    return `server error (${err.status}): ${err.detail}`;
  }
  return err instanceof Error ? err.message : String(err);
}
