// Client-side tuning session: parameter state plus the preview scheduler.
//
// The scheduler keeps at most one preview request in flight. Newer requests
// supersede queued ones, and responses are applied only when their sequence
// number is newer than everything applied so far, so a slow stale response
// can never overwrite a fresh preview.

import { PreviewResponse } from './api.js';
import { defaultParams, TuningParams, validateParams } from './params.js';

export type PreviewSender = (params: TuningParams) => Promise<PreviewResponse>;
export type PreviewHandler = (resp: PreviewResponse, seq: number) => void;
export type ErrorHandler = (message: string) => void;

export class PreviewScheduler {
  private seq = 0;
  private appliedSeq = 0;
  private inflight = false;
  private queued: TuningParams | null = null;

  constructor(
    private readonly send: PreviewSender,
    private readonly onApply: PreviewHandler,
    private readonly onError: ErrorHandler = () => {},
  ) {}

  get lastApplied(): number {
    return this.appliedSeq;
  }

  get issued(): number {
    return this.seq;
  }

  /** Requests a preview; collapses bursts onto the latest parameter set. */
  request(params: TuningParams): void {
    if (this.inflight) {
      this.queued = params;
      return;
    }
    void this.fire(params);
  }

  private async fire(params: TuningParams): Promise<void> {
    this.inflight = true;
    const mySeq = ++this.seq;
    try {
      const resp = await this.send(params);
      if (mySeq > this.appliedSeq) {
        this.appliedSeq = mySeq;
        this.onApply(resp, mySeq);
      }
    } catch (err) {
      this.onError(err instanceof Error ? err.message : String(err));
    } finally {
      this.inflight = false;
      if (this.queued !== null) {
        const next = this.queued;
        this.queued = null;
        this.request(next);
      }
    }
  }
}

export class TuningSession {
  params: TuningParams = defaultParams();
  dirty = false;

  constructor(
    readonly sessionId: string,
    readonly scheduler: PreviewScheduler,
  ) {}

  /** Applies a parameter change; returns validation errors (empty = sent). */
  update(change: Partial<TuningParams>): string[] {
    const next = { ...this.params, ...change };
    const errors = validateParams(next);
    if (errors.length > 0) {
      return errors;
    }
    this.params = next;
    this.dirty = true;
    this.scheduler.request(next);
    return [];
  }

  markSaved(): void {
    this.dirty = false;
  }
}
