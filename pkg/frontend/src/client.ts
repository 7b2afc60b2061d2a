/**
 * HTTP client for the typing service's browser bridge:
 * GET /events streams JSON state records as server-sent events and
 * POST /frames ingests binary frames.
 */

import { SseParser } from "./sse.js";

export interface StreamHandle {
  /** Resolves when the stream ends or is aborted. */
  done: Promise<void>;
  close(): void;
}

/**
 * Subscribe to the event feed.  Each parsed JSON record is passed to
 * `onEvent`; a clean or broken end of stream calls `onClose` once.
 */
export function streamEvents(
  baseUrl: string,
  onEvent: (event: unknown) => void,
  onClose: () => void = () => {},
): StreamHandle {
  const controller = new AbortController();
  const parser = new SseParser();
  const decoder = new TextDecoder();

  const done = (async () => {
    try {
      const res = await fetch(`${baseUrl}/events`, { signal: controller.signal });
      if (!res.ok || res.body === null) throw new Error(`events: HTTP ${res.status}`);
      const reader = res.body.getReader();
      for (;;) {
        const { done: eof, value } = await reader.read();
        if (eof) break;
        for (const data of parser.push(decoder.decode(value, { stream: true }))) {
          let record: unknown;
          try {
            record = JSON.parse(data);
          } catch {
            record = data; // malformed payload still reaches render() for the warning badge
          }
          onEvent(record);
        }
      }
    } catch {
      // aborted or connection lost — both end in onClose
    } finally {
      onClose();
    }
  })();

  return { done, close: () => controller.abort() };
}

/** Send one binary frame to the ingest bridge. */
export async function sendFrame(baseUrl: string, frame: Uint8Array): Promise<void> {
  const res = await fetch(`${baseUrl}/frames`, {
    method: "POST",
    headers: { "Content-Type": "application/octet-stream" },
    // copy so the body is backed by a plain ArrayBuffer, which every
    // fetch BodyInit typing accepts
    body: frame.slice().buffer as ArrayBuffer,
  });
  if (!res.ok) throw new Error(`frames: HTTP ${res.status}`);
}
