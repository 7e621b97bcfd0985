/** Ordered, duplicate-free store of rendered events for one session. */

import { toRenderedEvent, type RenderedEvent } from "./render.js";
import type { SessionEvent } from "./types.js";

export class Transcript {
  private readonly bySeq = new Map<number, RenderedEvent>();

  /** Insert an event; returns false (and changes nothing) when the seq
   * is already present, so replayed or re-delivered events are no-ops. */
  insert(event: SessionEvent): boolean {
    if (this.bySeq.has(event.seq)) return false;
    this.bySeq.set(event.seq, toRenderedEvent(event));
    return true;
  }

  insertAll(events: Iterable<SessionEvent>): number {
    let added = 0;
    for (const event of events) {
      if (this.insert(event)) added += 1;
    }
    return added;
  }

  /** Highest seq seen so far; -1 for an empty transcript. This is the
   * resume cursor handed back to the service after a disconnect. */
  get lastSeq(): number {
    let last = -1;
    for (const seq of this.bySeq.keys()) {
      if (seq > last) last = seq;
    }
    return last;
  }

  get size(): number {
    return this.bySeq.size;
  }

  /** Events in seq order, exactly once each. */
  view(): RenderedEvent[] {
    return [...this.bySeq.values()].sort((a, b) => a.seq - b.seq);
  }

  /** Flip one event's visibility in place; returns the new state, or
   * null when the seq is unknown. No re-fetch, no re-render of others. */
  toggleSection(seq: number): boolean | null {
    const rendered = this.bySeq.get(seq);
    if (!rendered) return null;
    rendered.collapsed = !rendered.collapsed;
    return rendered.collapsed;
  }

  /** Set one event's visibility outright; used when the DOM already
   * knows the target state (a details element reporting its open flag). */
  setCollapsed(seq: number, collapsed: boolean): void {
    const rendered = this.bySeq.get(seq);
    if (rendered) rendered.collapsed = collapsed;
  }
}
