export {
  BLOCKS,
  blockLabels,
  disconnected,
  initialView,
  render,
  type ConnectionStatus,
  type UiViewModel,
} from "./model.js";
export {
  FRAME_MAGIC,
  FRAME_VERSION,
  SAMPLES_PER_FRAME,
  encodeFrame,
  encodeIntentFrame,
} from "./frames.js";
export { SseParser } from "./sse.js";
export { sendFrame, streamEvents, type StreamHandle } from "./client.js";
export { DEFAULT_KEY_MAP, KeyboardSimulator, WINDOW_MS } from "./simulator.js";
