/**
 * Binary frame encoding for the ingest path.
 *
 * One frame is half a second of signal: magic "EEGW", version byte 1,
 * channel count (u16 LE), sample count (u16 LE, always 64), then
 * 64 x channels float32 LE values in sample-major order.
 */

export const FRAME_MAGIC = "EEGW";
export const FRAME_VERSION = 1;
export const SAMPLES_PER_FRAME = 64;

const HEADER_BYTES = 4 + 1 + 2 + 2;

/** Encode one frame from sample-major values (length 64 * channels). */
export function encodeFrame(values: Float32Array, channels: number): Uint8Array {
  if (values.length !== SAMPLES_PER_FRAME * channels) {
    throw new RangeError(
      `expected ${SAMPLES_PER_FRAME * channels} values, got ${values.length}`,
    );
  }
  const buf = new ArrayBuffer(HEADER_BYTES + 4 * values.length);
  const view = new DataView(buf);
  for (let i = 0; i < 4; i++) view.setUint8(i, FRAME_MAGIC.charCodeAt(i));
  view.setUint8(4, FRAME_VERSION);
  view.setUint16(5, channels, true);
  view.setUint16(7, SAMPLES_PER_FRAME, true);
  for (let i = 0; i < values.length; i++) {
    view.setFloat32(HEADER_BYTES + 4 * i, values[i]!, true);
  }
  return new Uint8Array(buf);
}

/**
 * A frame whose stub classification yields the given intent: the stub
 * classifier reads each sample's first channel value, so every value in
 * the frame is set to the intent label.
 */
export function encodeIntentFrame(intent: number, channels = 8): Uint8Array {
  if (!Number.isInteger(intent) || intent < 0 || intent > 4) {
    throw new RangeError(`intent must be 0..4, got ${intent}`);
  }
  const values = new Float32Array(SAMPLES_PER_FRAME * channels).fill(intent);
  return encodeFrame(values, channels);
}
