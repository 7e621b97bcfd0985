/** Session screen state machine: one transcript, one input, one stream. */

import { ConflictError, NotFoundError, SessionClient } from "./client.js";
import { Transcript } from "./transcript.js";

const TERMINAL_KINDS = new Set(["final_answer", "error"]);

export interface ControllerOptions {
  /** Polls allowed while recovering a dropped stream before giving up. */
  maxRecoveryPolls?: number;
  /** Pause between recovery polls; injectable so tests stay instant. */
  sleep?: (ms: number) => Promise<void>;
  pollIntervalMs?: number;
}

const defaultSleep = (ms: number) =>
  new Promise<void>((resolve) => setTimeout(resolve, ms));

export class ChatController {
  readonly transcript = new Transcript();
  inputDisabled = false;
  banner: string | null = null;

  private readonly maxRecoveryPolls: number;
  private readonly sleep: (ms: number) => Promise<void>;
  private readonly pollIntervalMs: number;

  constructor(
    private readonly client: SessionClient,
    private readonly sessionId: string,
    options: ControllerOptions = {},
  ) {
    this.maxRecoveryPolls = options.maxRecoveryPolls ?? 50;
    this.sleep = options.sleep ?? defaultSleep;
    this.pollIntervalMs = options.pollIntervalMs ?? 500;
  }

  /** Load everything already persisted; safe to call repeatedly because
   * the transcript drops seqs it has already seen. */
  async connect(): Promise<void> {
    try {
      const events = await this.client.history(this.sessionId, this.transcript.lastSeq);
      this.transcript.insertAll(events);
      this.banner = null;
    } catch (error) {
      if (error instanceof NotFoundError) {
        this.banner = `Unknown session ${this.sessionId}`;
        return;
      }
      throw error;
    }
  }

  /** Submit a message and stream the turn into the transcript. Empty
   * input is a no-op. A conflict disables the input until the running
   * turn is over. A dropped stream falls back to polling history from
   * the resume cursor until the turn's terminal event arrives. */
  async submit(text: string): Promise<void> {
    if (!text.trim()) return;
    this.inputDisabled = true;
    this.banner = null;
    try {
      await this.client.submitMessage(this.sessionId, text, (event) => {
        this.transcript.insert(event);
      });
    } catch (error) {
      if (error instanceof ConflictError) {
        this.banner = "A turn is already running";
        return; // stays disabled; resume() re-enables once the turn ends
      }
      if (error instanceof NotFoundError) {
        this.banner = `Unknown session ${this.sessionId}`;
        this.inputDisabled = false;
        return;
      }
      await this.recoverStream();
    } finally {
      if (this.banner === null) this.inputDisabled = false;
    }
  }

  /** After a network drop the turn keeps running server side and every
   * event it produced is already persisted, so poll history from the
   * last seen seq until the final answer (or an error event) shows up. */
  private async recoverStream(): Promise<void> {
    for (let attempt = 0; attempt < this.maxRecoveryPolls; attempt += 1) {
      const events = await this.client.history(
        this.sessionId,
        this.transcript.lastSeq,
      );
      this.transcript.insertAll(events);
      if (events.some((e) => TERMINAL_KINDS.has(e.kind))) return;
      await this.sleep(this.pollIntervalMs);
    }
    this.banner = "Lost the stream and could not catch up";
  }

  /** Re-sync after a conflict or a long pause; clears the busy state
   * when the persisted log shows the turn has finished. */
  async resume(): Promise<void> {
    const events = await this.client.history(this.sessionId, this.transcript.lastSeq);
    this.transcript.insertAll(events);
    const view = this.transcript.view();
    const last = view[view.length - 1];
    if (last && TERMINAL_KINDS.has(last.kind)) {
      this.inputDisabled = false;
      this.banner = null;
    }
  }
}
