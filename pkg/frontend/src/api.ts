// Typed client for the tuning service; fetch is injected for testability.

import { bytesToBase64 } from './pnm.js';
import { toWire, TuningParams } from './params.js';

export interface SessionInfo {
  id: string;
  width: number;
  height: number;
}

export interface HistogramResponse {
  bins: number[];
  total: number;
}

export interface GmmResponse {
  k: number;
  priors: number[];
  means: number[][];
  lumas: number[];
  roles: {
    background: number;
    text: number;
    scanner_white: number | null;
    noise: number[];
  };
}

export interface PreviewResponse {
  seq: number;
  superseded: boolean;
  binarized_text: string;
  foreground: string;
  background: string;
  restored: string;
}

export interface AcceptResponse {
  written: string[];
  params: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

type Fetch = typeof fetch;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: Fetch = fetch,
  ) {}

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const detail =
        typeof payload?.detail === 'string' ? payload.detail : `HTTP ${resp.status}`;
      throw new ApiError(resp.status, detail);
    }
    return payload as T;
  }

  createSession(pnmBytes: Uint8Array): Promise<SessionInfo> {
    return this.call('POST', '/session', { image: bytesToBase64(pnmBytes) });
  }

  histogram(
    sessionId: string,
    opts: { bright: boolean; contrastKind: string; contrastParam: number },
  ): Promise<HistogramResponse> {
    const query = new URLSearchParams({
      bright: String(opts.bright),
      contrast_kind: opts.contrastKind,
      contrast_param: String(opts.contrastParam),
    });
    return this.call('GET', `/session/${sessionId}/histogram?${query}`);
  }

  fitGmm(sessionId: string, k: number, seed: number): Promise<GmmResponse> {
    return this.call('POST', `/session/${sessionId}/gmm`, { k, seed });
  }

  preview(sessionId: string, params: TuningParams): Promise<PreviewResponse> {
    return this.call('POST', `/session/${sessionId}/preview`, { params: toWire(params) });
  }

  accept(sessionId: string, params: TuningParams, outPath: string): Promise<AcceptResponse> {
    return this.call('POST', `/session/${sessionId}/accept`, {
      out_path: outPath,
      params: toWire(params),
    });
  }
}
