/**
 * Browser entry point: connects to the typing service's HTTP bridge,
 * renders the three character blocks, the display block, and a cancel
 * affordance, and wires the keyboard simulation mode.
 *
 * Serve index.html from any static server and point it at a running
 * service (`neurotype serve --stub --http-port 8766`).
 */

import { sendFrame, streamEvents } from "./client.js";
import { disconnected, initialView, render, type UiViewModel } from "./model.js";
import { KeyboardSimulator } from "./simulator.js";

function draw(view: UiViewModel): void {
  const $ = (id: string) => document.getElementById(id)!;
  view.blocks.forEach((label, i) => {
    const el = $(`block-${i}`);
    el.textContent = label;
    el.classList.toggle("highlight", view.highlight === i);
  });
  $("typed").textContent = view.typed;
  $("level").textContent = view.level;
  $("last-command").textContent = view.lastCommand ?? "—";
  $("status").textContent = view.status;
  $("warning").hidden = !view.warning;
}

export function start(baseUrl: string): void {
  let view = initialView();
  draw(view);

  streamEvents(
    baseUrl,
    (event) => {
      view = render(event, view);
      draw(view);
    },
    () => {
      view = disconnected(view);
      draw(view);
    },
  );

  const simulator = new KeyboardSimulator((frame) => {
    sendFrame(baseUrl, frame).catch(() => {});
  });
  document.addEventListener("keydown", (e) => simulator.keyDown(e.key));
  document.addEventListener("keyup", (e) => simulator.keyUp(e.key));
  simulator.start();
}

declare global {
  interface Window {
    NEUROTYPE_URL?: string;
  }
}

if (typeof document !== "undefined" && document.getElementById("typed")) {
  start(window.NEUROTYPE_URL ?? "http://127.0.0.1:8766");
}
