/**
 * End-to-end drive-through against a real service process: spawn
 * `neurotype serve --stub`, subscribe to the event feed over the HTTP
 * bridge, and type "HI" with the keyboard simulator.  The display block
 * must match the server's typed text at every event.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { sendFrame, streamEvents } from "../src/client.js";
import { disconnected, initialView, render, type UiViewModel } from "../src/model.js";
import { KeyboardSimulator } from "../src/simulator.js";

let server: ChildProcess;
let baseUrl: string;

beforeAll(async () => {
  server = spawn("neurotype", [
    "serve",
    "--listen",
    "127.0.0.1:0",
    "--stub",
    "--http-port",
    "0",
  ]);
  baseUrl = await new Promise<string>((resolve, reject) => {
    let out = "";
    const timer = setTimeout(() => reject(new Error(`server never came up: ${out}`)), 15000);
    server.stdout!.on("data", (chunk: Buffer) => {
      out += chunk.toString();
      const m = out.match(/http bridge on port (\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve(`http://127.0.0.1:${m[1]}`);
      }
    });
    server.on("exit", (code) => reject(new Error(`server exited early (${code}): ${out}`)));
  });
}, 20000);

afterAll(() => {
  server?.kill();
});

describe("UI drive-through", () => {
  it("types HI via keyboard-simulated intents, view matching the server throughout", async () => {
    let view: UiViewModel = initialView();
    const mismatches: string[] = [];
    let typedNow = "";
    let resolveDone: () => void;
    const typedHI = new Promise<void>((r) => (resolveDone = r));

    const stream = streamEvents(
      baseUrl,
      (event) => {
        view = render(event, view);
        const serverTyped = (event as { typed?: string }).typed;
        if (view.typed !== serverTyped) {
          mismatches.push(`view ${view.typed!} != server ${serverTyped}`);
        }
        typedNow = view.typed;
        if (typedNow === "HI") resolveDone();
      },
      () => {
        view = disconnected(view);
      },
    );

    // Frames go through the same POST bridge a browser would use; the
    // simulator queues them and we flush in order after each tick.
    const queue: Uint8Array[] = [];
    const simulator = new KeyboardSimulator((frame) => queue.push(frame));

    // H = blocks (0,2,1), I = blocks (0,2,2); each selection is the
    // arrow key held for three windows, then Enter held for three.
    const keys = [
      "ArrowLeft", "Enter", "ArrowRight", "Enter", "ArrowUp", "Enter", // H
      "ArrowLeft", "Enter", "ArrowRight", "Enter", "ArrowRight", "Enter", // I
    ];
    for (const key of keys) {
      simulator.keyDown(key);
      for (let w = 0; w < 3; w++) {
        simulator.tick();
        while (queue.length) await sendFrame(baseUrl, queue.shift()!);
      }
      simulator.keyUp(key);
    }

    await Promise.race([
      typedHI,
      new Promise((_, reject) =>
        setTimeout(() => reject(new Error(`timed out; typed so far: ${typedNow}`)), 20000),
      ),
    ]);
    stream.close();
    await stream.done;

    expect(mismatches).toEqual([]);
    expect(view.typed).toBe("HI");
    expect(view.status).toBe("disconnected"); // closed stream freezes the view
  }, 40000);
});
