/** Release gate for the frontend, run against the canned case-study log. */

import { describe, expect, it } from "vitest";

import caseEvents from "./fixtures/case1_events.json";
import { SessionClient, type FetchLike } from "../src/client.js";
import { ChatController } from "../src/controller.js";
import { renderTranscriptHtml } from "../src/html.js";
import { Transcript } from "../src/transcript.js";
import type { SessionEvent } from "../src/types.js";

const LOG = caseEvents as SessionEvent[];

describe("canned log replay", () => {
  it("renders every event exactly once in seq order", () => {
    const transcript = new Transcript();
    expect(transcript.insertAll(LOG)).toBe(LOG.length);
    const view = transcript.view();
    expect(view.map((e) => e.seq)).toEqual(LOG.map((e) => e.seq));

    const html = renderTranscriptHtml(view);
    for (const event of LOG) {
      const marker = `data-seq="${event.seq}"`;
      expect(html.split(marker).length - 1).toBe(1);
    }
  });

  it("collapses reasoning and code, leaves the final answer open", () => {
    const transcript = new Transcript();
    transcript.insertAll(LOG);
    for (const rendered of transcript.view()) {
      if (rendered.kind === "agent_message" || rendered.kind === "tool_call") {
        expect(rendered.collapsed, `seq ${rendered.seq}`).toBe(true);
      }
      if (rendered.kind === "final_answer") {
        expect(rendered.collapsed, `seq ${rendered.seq}`).toBe(false);
      }
    }
    const reasoningBearing = transcript
      .view()
      .filter((e) => e.blocks.some((b) => b.type === "reasoning" || b.type === "code"));
    expect(reasoningBearing.length).toBeGreaterThan(0);
    for (const rendered of reasoningBearing) {
      expect(rendered.collapsed, `seq ${rendered.seq}`).toBe(true);
    }
  });

  it("keeps captions and reward chips visible", () => {
    const transcript = new Transcript();
    transcript.insertAll(LOG);
    const chips = transcript
      .view()
      .filter((e) => e.blocks.some((b) => b.type === "reward" || b.type === "caption"));
    expect(chips.length).toBeGreaterThan(0);
    for (const rendered of chips) {
      expect(rendered.collapsed).toBe(false);
    }
  });
});

describe("reconnect behavior", () => {
  it("produces no duplicates when the stream drops mid-turn", async () => {
    const dropAt = 17;
    async function* interrupted(): AsyncGenerator<string> {
      for (const event of LOG.slice(0, dropAt)) {
        yield `id: ${event.seq}\ndata: ${JSON.stringify(event)}\n\n`;
      }
      throw new Error("connection reset");
    }
    const fetchImpl: FetchLike = async (url) => {
      if (url.endsWith("/messages")) {
        return { status: 200, body: interrupted(), json: async () => ({}), text: async () => "" };
      }
      if (url.endsWith("/history")) {
        return { status: 200, json: async () => ({ events: LOG }), text: async () => "" };
      }
      throw new Error(`unexpected url ${url}`);
    };
    const controller = new ChatController(
      new SessionClient("http://svc", fetchImpl), "case1",
      { sleep: async () => {}, maxRecoveryPolls: 3 },
    );
    await controller.submit("replay the case study");

    const seqs = controller.transcript.view().map((e) => e.seq);
    expect(seqs).toEqual(LOG.map((e) => e.seq));
    expect(new Set(seqs).size).toBe(LOG.length);
    expect(controller.inputDisabled).toBe(false);
  });
});
