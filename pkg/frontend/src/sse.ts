/**
 * Minimal server-sent-events parser.
 *
 * The event feed uses only `data:` lines with one JSON record per
 * event, so the parser accumulates raw text and yields the data payload
 * of each complete (blank-line-terminated) event.  It is chunking-safe:
 * bytes may arrive split anywhere, including mid-line.
 */
export class SseParser {
  private buffer = "";

  /** Feed a chunk of stream text; returns completed data payloads. */
  push(chunk: string): string[] {
    this.buffer += chunk;
    const out: string[] = [];
    let sep: number;
    while ((sep = this.buffer.indexOf("\n\n")) !== -1) {
      const block = this.buffer.slice(0, sep);
      this.buffer = this.buffer.slice(sep + 2);
      const data = block
        .split("\n")
        .filter((line) => line.startsWith("data:"))
        .map((line) => line.slice(5).replace(/^ /, ""))
        .join("\n");
      if (data) out.push(data);
    }
    return out;
  }
}
