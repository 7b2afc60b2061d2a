/**
 * Keyboard simulation mode: lets a human steer the typing interface
 * without a headset.  While a mapped key is held, one synthetic frame
 * is emitted per half-second window whose stub classification yields
 * the mapped intent; the server applies its normal aggregation, so
 * holding a key for three windows produces exactly one command.
 */

import { encodeIntentFrame } from "./frames.js";

export const WINDOW_MS = 500;

/** Default key map; intents 0..4 drive Left/Up/Right/Cancel/Confirm. */
export const DEFAULT_KEY_MAP: Record<string, number> = {
  ArrowLeft: 0,
  ArrowUp: 1,
  ArrowRight: 2,
  Backspace: 3,
  Enter: 4,
};

export class KeyboardSimulator {
  private held: string | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly send: (frame: Uint8Array) => void,
    private keyMap: Record<string, number> = DEFAULT_KEY_MAP,
    private readonly channels = 8,
  ) {}

  /** Replace the key map (settings panel). */
  setKeyMap(map: Record<string, number>): void {
    this.keyMap = map;
  }

  /** Key pressed; unmapped keys are ignored. */
  keyDown(key: string): void {
    if (key in this.keyMap) this.held = key;
  }

  keyUp(key: string): void {
    if (this.held === key) this.held = null;
  }

  /**
   * One window boundary: emit a frame for the held key, if any.
   * Called on the 0.5 s cadence by start(), or directly in tests and
   * scripted drivers.
   */
  tick(): void {
    if (this.held === null) return;
    const intent = this.keyMap[this.held];
    if (intent === undefined) return;
    this.send(encodeIntentFrame(intent, this.channels));
  }

  /** Emit frames on the real half-second cadence. */
  start(intervalMs: number = WINDOW_MS): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => this.tick(), intervalMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
    this.held = null;
  }
}
