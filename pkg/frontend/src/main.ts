/** Browser entry point: wires the controller to a minimal chat page. */

import { SessionClient } from "./client.js";
import { ChatController } from "./controller.js";
import { renderTranscriptHtml } from "./html.js";

export async function mount(root: HTMLElement, baseUrl = ""): Promise<void> {
  const client = new SessionClient(baseUrl);
  const session = await client.createSession();
  const controller = new ChatController(client, session.session_id);

  root.innerHTML = `
    <div class="banner" hidden></div>
    <div class="transcript"></div>
    <form class="composer">
      <input type="text" name="message" autocomplete="off"
             placeholder="Ask a research question">
      <button type="submit">Send</button>
    </form>`;
  const banner = root.querySelector<HTMLElement>(".banner");
  const transcript = root.querySelector<HTMLElement>(".transcript");
  const form = root.querySelector<HTMLFormElement>(".composer");
  const input = root.querySelector<HTMLInputElement>("input[name=message]");
  if (!banner || !transcript || !form || !input) return;

  const redraw = () => {
    transcript.innerHTML = renderTranscriptHtml(controller.transcript.view());
    input.disabled = controller.inputDisabled;
    banner.hidden = controller.banner === null;
    banner.textContent = controller.banner ?? "";
  };

  transcript.addEventListener("toggle", (event) => {
    const details = event.target as HTMLDetailsElement | null;
    const seq = Number(details?.dataset.seq);
    if (details && Number.isInteger(seq)) {
      controller.transcript.setCollapsed(seq, !details.open);
    }
  }, true);

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value;
    input.value = "";
    void controller
      .submit(text)
      .then(redraw)
      .catch(() => redraw());
    redraw();
  });

  await controller.connect();
  redraw();
}
