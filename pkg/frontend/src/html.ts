/** HTML string rendering of the view model; no framework, no state. */

import type { Block, RenderedEvent } from "./render.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

function blockHtml(block: Block): string {
  switch (block.type) {
    case "text":
      return `<p>${escapeHtml(block.text)}</p>`;
    case "reasoning":
      return `<p class="reasoning ${block.label}">${escapeHtml(block.text)}</p>`;
    case "code":
      return `<pre class="code" data-language="${escapeHtml(block.language)}">`
        + `${escapeHtml(block.text)}</pre>`;
    case "monospace":
      return `<pre class="result">${escapeHtml(block.text)}</pre>`;
    case "table": {
      const head = block.header.map((c) => `<th>${escapeHtml(c)}</th>`).join("");
      const body = block.rows
        .map((row) => `<tr>${row.map((c) => `<td>${escapeHtml(c)}</td>`).join("")}</tr>`)
        .join("");
      return `<table><thead><tr>${head}</tr></thead><tbody>${body}</tbody></table>`;
    }
    case "figure": {
      const caption = block.caption
        ? `<figcaption>${escapeHtml(block.caption)}</figcaption>`
        : "";
      return `<figure><img loading="lazy" src="${escapeHtml(block.src)}" alt="">`
        + `${caption}</figure>`;
    }
    case "caption":
      return `<p class="caption">${escapeHtml(block.text)}</p>`;
    case "reward": {
      const note = block.note ? ` <span class="note">${escapeHtml(block.note)}</span>` : "";
      return `<span class="reward-chip band-${block.band}">`
        + `${block.value.toFixed(2)}</span>${note}`;
    }
  }
}

export function renderEventHtml(rendered: RenderedEvent): string {
  const blocks = rendered.blocks.map(blockHtml).join("");
  const open = rendered.collapsed ? "" : " open";
  return (
    `<details class="event kind-${rendered.kind}" data-seq="${rendered.seq}"${open}>`
    + `<summary><span class="badge">${escapeHtml(rendered.badge)}</span> `
    + `${rendered.kind}</summary>${blocks}</details>`
  );
}

export function renderTranscriptHtml(view: RenderedEvent[]): string {
  return view.map(renderEventHtml).join("\n");
}
