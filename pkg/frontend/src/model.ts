/**
 * View model for the typing interface.
 *
 * The server streams JSON state events; the view is a pure function of
 * the last event.  The client never mutates typed text itself — it only
 * mirrors what the server says, so the display block can never drift
 * from the session state.
 */

/** The 27 characters, three top-level blocks of nine. */
export const BLOCKS = ["ABCDEFGHI", "JKLMNOPQR", "STUVWXYZ "] as const;

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface UiViewModel {
  /** "initial" | "sub" | "bottom" — which tree level is shown. */
  level: string;
  /** The three selectable block labels at this level. */
  blocks: [string, string, string];
  /** Index 0..2 of the highlighted block, or null. */
  highlight: number | null;
  /** Contents of the display block. */
  typed: string;
  /** Last command the server emitted, e.g. "confirm", or null. */
  lastCommand: string | null;
  status: ConnectionStatus;
  /** Set when a malformed or unknown event was ignored. */
  warning: boolean;
}

export function initialView(): UiViewModel {
  return {
    level: "initial",
    blocks: [...BLOCKS] as [string, string, string],
    highlight: null,
    typed: "",
    lastCommand: null,
    status: "connecting",
    warning: false,
  };
}

/**
 * Block labels for a selection path, mirroring the server's character
 * tree: [] shows the three nine-character blocks, [i] the three
 * three-character sub-blocks of block i, [i, j] the three single
 * characters of sub-block j.
 */
export function blockLabels(path: number[]): [string, string, string] {
  if (path.length === 0) return [...BLOCKS] as [string, string, string];
  const top = BLOCKS[path[0]!];
  if (top === undefined) throw new RangeError(`block index ${path[0]}`);
  if (path.length === 1) {
    return [top.slice(0, 3), top.slice(3, 6), top.slice(6, 9)];
  }
  if (path.length === 2) {
    const sub = top.slice(3 * path[1]!, 3 * path[1]! + 3);
    if (sub.length !== 3) throw new RangeError(`sub-block index ${path[1]}`);
    return [sub[0]!, sub[1]!, sub[2]!];
  }
  throw new RangeError("path deeper than the bottom level");
}

function isStateEvent(e: unknown): e is {
  kind: string;
  level: string;
  blocks: string[];
  highlight: number | null;
  typed: string;
  last_command: string | null;
} {
  if (typeof e !== "object" || e === null) return false;
  const r = e as Record<string, unknown>;
  return (
    typeof r.kind === "string" &&
    typeof r.level === "string" &&
    Array.isArray(r.blocks) &&
    r.blocks.length === 3 &&
    r.blocks.every((b) => typeof b === "string") &&
    (r.highlight === null || typeof r.highlight === "number") &&
    typeof r.typed === "string" &&
    (r.last_command === null || typeof r.last_command === "string")
  );
}

/**
 * Fold one event record into the view.  Malformed records and unknown
 * event kinds keep the prior view and raise the warning badge; a
 * well-formed state event replaces the view (and clears the badge).
 */
export function render(event: unknown, prev: UiViewModel = initialView()): UiViewModel {
  if (!isStateEvent(event) || event.kind !== "state") {
    return { ...prev, warning: true };
  }
  return {
    level: event.level,
    blocks: [event.blocks[0]!, event.blocks[1]!, event.blocks[2]!],
    highlight: event.highlight,
    typed: event.typed,
    lastCommand: event.last_command,
    status: "connected",
    warning: false,
  };
}

/** Connection dropped: freeze the view, show the status banner. */
export function disconnected(prev: UiViewModel): UiViewModel {
  return { ...prev, status: "disconnected" };
}
