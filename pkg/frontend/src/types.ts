/** Wire types for the session service HTTP API. */

export const EVENT_KINDS = [
  "user_message",
  "agent_message",
  "delegation",
  "tool_call",
  "tool_result",
  "evaluation",
  "figure_standin",
  "budget",
  "error",
  "final_answer",
] as const;

export type EventKind = (typeof EVENT_KINDS)[number];

export interface AttachmentRef {
  kind: "file" | "image";
  reference: string;
  media_type: string;
}

export interface ToolCallRef {
  id: string;
  tool: string;
  arguments: Record<string, unknown>;
}

export interface SessionEvent {
  seq: number;
  timestamp: string;
  kind: EventKind;
  agent: string;
  payload: Record<string, unknown>;
}

export interface SessionSummary {
  session_id: string;
  created_at: string;
  title: string;
  events: number;
}

export function isSessionEvent(value: unknown): value is SessionEvent {
  if (typeof value !== "object" || value === null) return false;
  const candidate = value as Record<string, unknown>;
  return (
    typeof candidate.seq === "number" &&
    Number.isInteger(candidate.seq) &&
    candidate.seq >= 0 &&
    typeof candidate.timestamp === "string" &&
    typeof candidate.agent === "string" &&
    (EVENT_KINDS as readonly string[]).includes(candidate.kind as string) &&
    typeof candidate.payload === "object" &&
    candidate.payload !== null
  );
}
