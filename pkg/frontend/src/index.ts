export {
  ConflictError,
  NotFoundError,
  ServiceError,
  SessionClient,
  SseParser,
} from "./client.js";
export { ChatController } from "./controller.js";
export {
  escapeHtml,
  renderEventHtml,
  renderTranscriptHtml,
} from "./html.js";
export {
  ADJUST_THRESHOLD,
  CONTINUE_THRESHOLD,
  DEFAULT_COLLAPSED,
  parsePipeTable,
  rewardBand,
  splitTaggedText,
  toRenderedEvent,
} from "./render.js";
export type { Band, Block, RenderedEvent } from "./render.js";
export { Transcript } from "./transcript.js";
export { EVENT_KINDS, isSessionEvent } from "./types.js";
export type {
  AttachmentRef,
  EventKind,
  SessionEvent,
  SessionSummary,
  ToolCallRef,
} from "./types.js";
export { mount } from "./main.js";
