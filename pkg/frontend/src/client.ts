/** HTTP client for the session service: REST calls plus SSE parsing. */

import { isSessionEvent, type SessionEvent, type SessionSummary } from "./types.js";

export class ServiceError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
    this.name = "ServiceError";
  }
}

export class NotFoundError extends ServiceError {
  constructor(message: string) {
    super(message, 404);
    this.name = "NotFoundError";
  }
}

export class ConflictError extends ServiceError {
  constructor(message: string) {
    super(message, 409);
    this.name = "ConflictError";
  }
}

export interface SseFrame {
  id: string | null;
  data: string;
}

/** Incremental server-sent-events parser; feed it chunks, collect frames.
 * Partial frames stay buffered until their terminating blank line. */
export class SseParser {
  private buffer = "";

  feed(chunk: string): SseFrame[] {
    this.buffer += chunk;
    const frames: SseFrame[] = [];
    let boundary = this.buffer.indexOf("\n\n");
    while (boundary >= 0) {
      const raw = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const frame: SseFrame = { id: null, data: "" };
      const dataLines: string[] = [];
      for (const line of raw.split("\n")) {
        if (line.startsWith("id:")) frame.id = line.slice(3).trim();
        else if (line.startsWith("data:")) dataLines.push(line.slice(5).trim());
      }
      frame.data = dataLines.join("\n");
      if (frame.data) frames.push(frame);
      boundary = this.buffer.indexOf("\n\n");
    }
    return frames;
  }
}

type BodyLike =
  | AsyncIterable<Uint8Array | string>
  | { getReader(): { read(): Promise<{ done: boolean; value?: Uint8Array }> } }
  | null;

interface ResponseLike {
  status: number;
  body?: BodyLike;
  json(): Promise<unknown>;
  text(): Promise<string>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<ResponseLike>;

async function* chunksOf(body: BodyLike): AsyncGenerator<string> {
  if (!body) return;
  const decoder = new TextDecoder();
  if (Symbol.asyncIterator in body) {
    for await (const chunk of body as AsyncIterable<Uint8Array | string>) {
      yield typeof chunk === "string" ? chunk : decoder.decode(chunk, { stream: true });
    }
    return;
  }
  const reader = body.getReader();
  for (;;) {
    const { done, value } = await reader.read();
    if (done) return;
    if (value) yield decoder.decode(value, { stream: true });
  }
}

async function raiseFor(response: ResponseLike, what: string): Promise<void> {
  if (response.status === 404) throw new NotFoundError(`${what}: not found`);
  if (response.status === 409) throw new ConflictError(`${what}: session is busy`);
  if (response.status >= 400) {
    throw new ServiceError(`${what}: ${await response.text()}`, response.status);
  }
}

export class SessionClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch as unknown as FetchLike,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}${path}`;
  }

  async createSession(): Promise<SessionSummary> {
    const response = await this.fetchImpl(this.url("/sessions"), { method: "POST" });
    await raiseFor(response, "create session");
    return (await response.json()) as SessionSummary;
  }

  async listSessions(): Promise<SessionSummary[]> {
    const response = await this.fetchImpl(this.url("/sessions"));
    await raiseFor(response, "list sessions");
    const data = (await response.json()) as { sessions: SessionSummary[] };
    return data.sessions;
  }

  /** Full history, filtered to seqs after the caller's resume cursor. */
  async history(sessionId: string, afterSeq = -1): Promise<SessionEvent[]> {
    const response = await this.fetchImpl(
      this.url(`/sessions/${encodeURIComponent(sessionId)}/history`),
    );
    await raiseFor(response, `history of ${sessionId}`);
    const data = (await response.json()) as { events: unknown[] };
    return data.events.filter(isSessionEvent).filter((e) => e.seq > afterSeq);
  }

  /** Post one message and deliver each streamed event as it arrives.
   * The returned promise settles when the server closes the stream. */
  async submitMessage(
    sessionId: string,
    text: string,
    onEvent: (event: SessionEvent) => void,
  ): Promise<void> {
    const response = await this.fetchImpl(
      this.url(`/sessions/${encodeURIComponent(sessionId)}/messages`),
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ text }),
      },
    );
    await raiseFor(response, `message to ${sessionId}`);
    const parser = new SseParser();
    for await (const chunk of chunksOf(response.body ?? null)) {
      for (const frame of parser.feed(chunk)) {
        const parsed: unknown = JSON.parse(frame.data);
        if (isSessionEvent(parsed)) onEvent(parsed);
      }
    }
  }

  artifactUrl(reference: string): string {
    return this.url(`/artifacts/${encodeURIComponent(reference)}`);
  }
}
