/** Pure view model: one SessionEvent in, one RenderedEvent out. */

import type { AttachmentRef, EventKind, SessionEvent, ToolCallRef } from "./types.js";

export type Band = "continue" | "adjust" | "backtrack";

export const CONTINUE_THRESHOLD = 0.8;
export const ADJUST_THRESHOLD = 0.5;

export function rewardBand(value: number): Band {
  if (value >= CONTINUE_THRESHOLD) return "continue";
  if (value >= ADJUST_THRESHOLD) return "adjust";
  return "backtrack";
}

export type Block =
  | { type: "text"; text: string }
  | { type: "reasoning"; label: "thinking" | "step"; text: string }
  | { type: "code"; language: string; text: string }
  | { type: "table"; header: string[]; rows: string[][] }
  | { type: "monospace"; text: string }
  | { type: "figure"; src: string; caption: string | null }
  | { type: "caption"; text: string }
  | { type: "reward"; value: number; band: Band; note: string | null };

export interface RenderedEvent {
  seq: number;
  kind: EventKind;
  badge: string;
  collapsed: boolean;
  blocks: Block[];
}

/** Default visibility per event kind: reasoning and code start folded,
 * everything a reader acts on (answers, results, captions, reward chips)
 * starts open. */
export const DEFAULT_COLLAPSED: Record<EventKind, boolean> = {
  user_message: false,
  agent_message: true,
  delegation: false,
  tool_call: true,
  tool_result: false,
  evaluation: false,
  figure_standin: false,
  budget: false,
  error: false,
  final_answer: false,
};

const TAG_PATTERN = /<(thinking|step|count|reflection|reward|answer|caption|report)>([\s\S]*?)<\/\1>/g;

interface Segment {
  tag: string | null;
  text: string;
}

/** Split tagged agent text into (tag, body) segments; untagged spans get
 * a null tag. Unclosed or unknown tags stay in the surrounding text. */
export function splitTaggedText(text: string): Segment[] {
  const segments: Segment[] = [];
  let cursor = 0;
  for (const match of text.matchAll(TAG_PATTERN)) {
    const start = match.index ?? 0;
    const before = text.slice(cursor, start).trim();
    if (before) segments.push({ tag: null, text: before });
    segments.push({ tag: match[1] ?? null, text: (match[2] ?? "").trim() });
    cursor = start + match[0].length;
  }
  const tail = text.slice(cursor).trim();
  if (tail) segments.push({ tag: null, text: tail });
  return segments;
}

const TABLE_DIVIDER = /^:?-{2,}:?$/;

function splitRow(line: string): string[] {
  return line
    .trim()
    .replace(/^\|/, "")
    .replace(/\|$/, "")
    .split("|")
    .map((cell) => cell.trim());
}

/** Parse pipe-delimited text into a table, or return null when the text
 * is not table-shaped (then it renders as a monospace block). */
export function parsePipeTable(
  text: string,
): { header: string[]; rows: string[][] } | null {
  const lines = text
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0);
  if (lines.length < 2 || !lines.every((line) => line.startsWith("|"))) {
    return null;
  }
  const header = splitRow(lines[0] ?? "");
  let body = lines.slice(1);
  const first = body[0];
  if (first !== undefined && splitRow(first).every((c) => TABLE_DIVIDER.test(c))) {
    body = body.slice(1);
  }
  return { header, rows: body.map(splitRow) };
}

const CODE_TOOLS = new Set(["python", "r", "julia", "sql_query"]);

function stringOr(value: unknown, fallback: string): string {
  return typeof value === "string" ? value : fallback;
}

function numberOr(value: unknown, fallback: number): number {
  return typeof value === "number" ? value : fallback;
}

function messageBlocks(payload: Record<string, unknown>): Block[] {
  const blocks: Block[] = [];
  for (const segment of splitTaggedText(stringOr(payload.text, ""))) {
    if (segment.tag === "thinking" || segment.tag === "step") {
      blocks.push({ type: "reasoning", label: segment.tag, text: segment.text });
    } else if (segment.tag === "count" || segment.tag === "reward") {
      continue; // bookkeeping tags carry no prose worth showing
    } else if (segment.text) {
      blocks.push({ type: "text", text: segment.text });
    }
  }
  return blocks;
}

function toolCallBlocks(payload: Record<string, unknown>): Block[] {
  const tool = stringOr(payload.tool, "tool");
  const args = (payload.arguments ?? {}) as Record<string, unknown>;
  if (CODE_TOOLS.has(tool) && typeof args.query === "string") {
    return [{ type: "code", language: tool, text: args.query }];
  }
  return [{ type: "code", language: "json", text: JSON.stringify(args, null, 2) }];
}

function toolResultBlocks(payload: Record<string, unknown>): Block[] {
  const blocks: Block[] = [];
  const text = stringOr(payload.text, "").trim();
  if (text) {
    const table = parsePipeTable(text);
    blocks.push(table ? { type: "table", ...table } : { type: "monospace", text });
  }
  if (payload.ok === false) {
    blocks.push({ type: "text", text: `error: ${stringOr(payload.error, "failed")}` });
  }
  const attachments = (payload.attachments ?? []) as AttachmentRef[];
  for (const attachment of attachments) {
    if (attachment.kind === "image") {
      blocks.push({
        type: "figure",
        src: `/artifacts/${attachment.reference}`,
        caption: null,
      });
    } else {
      blocks.push({ type: "text", text: `saved: ${attachment.reference}` });
    }
  }
  return blocks;
}

function evaluationBlocks(payload: Record<string, unknown>): Block[] {
  const reward = numberOr(payload.reward, 0);
  const note =
    typeof payload.reflection === "string" && payload.reflection
      ? payload.reflection
      : null;
  const blocks: Block[] = [
    { type: "reward", value: reward, band: rewardBand(reward), note },
  ];
  if (typeof payload.caption === "string" && payload.caption) {
    blocks.push({ type: "caption", text: payload.caption });
  }
  if (typeof payload.report === "string" && payload.report) {
    blocks.push({ type: "text", text: payload.report });
  }
  return blocks;
}

export function toRenderedEvent(event: SessionEvent): RenderedEvent {
  const payload = event.payload;
  let blocks: Block[];
  switch (event.kind) {
    case "user_message":
    case "final_answer":
      blocks = [{ type: "text", text: stringOr(payload.text, "") }];
      break;
    case "agent_message":
      blocks = messageBlocks(payload);
      break;
    case "delegation":
      blocks = [{
        type: "text",
        text: `-> ${stringOr(payload.specialist, "?")}: ${stringOr(payload.task, "")}`,
      }];
      break;
    case "tool_call":
      blocks = toolCallBlocks(payload);
      break;
    case "tool_result":
      blocks = toolResultBlocks(payload);
      break;
    case "evaluation":
      blocks = evaluationBlocks(payload);
      break;
    case "figure_standin":
      blocks = [{
        type: "figure",
        src: `/artifacts/${stringOr(payload.reference, "")}`,
        caption: stringOr(payload.caption, "") || null,
      }];
      break;
    case "budget":
      blocks = [{
        type: "text",
        text: `budget: ${stringOr(payload.note, "")} `
          + `(remaining ${numberOr(payload.remaining, 0)})`,
      }];
      break;
    case "error":
      blocks = [{ type: "text", text: stringOr(payload.message, "") }];
      break;
  }
  return {
    seq: event.seq,
    kind: event.kind,
    badge: event.agent,
    collapsed: DEFAULT_COLLAPSED[event.kind],
    blocks,
  };
}
