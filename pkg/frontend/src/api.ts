/**
 * Thin typed client for the session service HTTP API.
 *
 * Every method maps 1:1 to an endpoint; non-2xx responses become ApiError
 * carrying the HTTP status and the server's `detail` string so the UI can
 * render e.g. an insufficient-seeds 409 as an inline hint.
 */

import type { Annotation } from "./annotation.js";

export interface MetricsSnapshot {
  iou: number | null;
  alpha: number | null;
  beta: number | null;
  compute_seconds: number;
  interaction_seconds: number;
}

export interface SessionInfo {
  session_id: string;
  width: number;
  height: number;
  has_gt: boolean;
}

export interface RefineResult {
  mask_png_base64: string;
  metrics: MetricsSnapshot;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (...a) => fetch(...a),
  ) {}

  async createSession(
    image: Blob,
    algorithm: string,
    gt?: Blob,
    params?: Record<string, unknown>,
  ): Promise<SessionInfo> {
    const form = new FormData();
    form.append("image", image, "image.png");
    form.append("algorithm", algorithm);
    if (gt) form.append("gt", gt, "gt.png");
    if (params) form.append("params", JSON.stringify(params));
    const res = await this.fetchImpl(`${this.base}/sessions`, { method: "POST", body: form });
    return this.json<SessionInfo>(res);
  }

  async postScribbles(sessionId: string, annotation: Annotation): Promise<void> {
    const res = await this.fetchImpl(`${this.base}/sessions/${sessionId}/scribbles`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(annotation),
    });
    if (!res.ok) throw await this.toError(res);
  }

  async refine(sessionId: string): Promise<RefineResult> {
    const res = await this.fetchImpl(`${this.base}/sessions/${sessionId}/refine`, {
      method: "POST",
    });
    return this.json<RefineResult>(res);
  }

  async undo(sessionId: string): Promise<{ depth: number }> {
    const res = await this.fetchImpl(`${this.base}/sessions/${sessionId}/undo`, {
      method: "POST",
    });
    return this.json<{ depth: number }>(res);
  }

  async maskPng(sessionId: string): Promise<Blob> {
    const res = await this.fetchImpl(`${this.base}/sessions/${sessionId}/mask`, {});
    if (!res.ok) throw await this.toError(res);
    return res.blob();
  }

  async metrics(sessionId: string): Promise<MetricsSnapshot[]> {
    const res = await this.fetchImpl(`${this.base}/sessions/${sessionId}/metrics`, {});
    return this.json<MetricsSnapshot[]>(res);
  }

  private async json<T>(res: Response): Promise<T> {
    if (!res.ok) throw await this.toError(res);
    return (await res.json()) as T;
  }

  private async toError(res: Response): Promise<ApiError> {
    let detail = res.statusText;
    try {
      const body = await res.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      /* non-JSON error body: keep the status text */
    }
    return new ApiError(res.status, detail);
  }
}
