// Binary PNM (P5 grayscale / P6 color, maxval 255) decoding for the wire
// format the tuning service speaks: images travel as base64 PNM payloads.

export interface PnmImage {
  width: number;
  height: number;
  channels: 1 | 3;
  pixels: Uint8Array; // row-major, interleaved for color
}

export class PnmError extends Error {
  constructor(message: string, readonly offset: number) {
    super(`${message} (byte ${offset})`);
  }
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;
}

export function decodePnm(data: Uint8Array): PnmImage {
  if (data.length < 2) throw new PnmError('file too short for magic', 0);
  const magic = String.fromCharCode(data[0], data[1]);
  if (magic !== 'P5' && magic !== 'P6') {
    throw new PnmError(`unsupported magic ${magic}`, 0);
  }
  const channels = magic === 'P5' ? 1 : 3;

  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < data.length && isSpace(data[pos])) pos++;
    if (data[pos] === 0x23) {
      // comment to end of line
      while (pos < data.length && data[pos] !== 0x0a) pos++;
      continue;
    }
    const start = pos;
    while (pos < data.length && !isSpace(data[pos])) pos++;
    if (pos === start) throw new PnmError('truncated header', start);
    const token = String.fromCharCode(...data.subarray(start, pos));
    const value = Number(token);
    if (!Number.isInteger(value) || value < 0) {
      throw new PnmError(`bad header field ${token}`, start);
    }
    fields.push(value);
  }
  const [width, height, maxval] = fields;
  if (width < 1 || height < 1) throw new PnmError(`bad dimensions ${width}x${height}`, pos);
  if (maxval !== 255) throw new PnmError(`unsupported maxval ${maxval}`, pos);
  pos += 1; // single whitespace byte after maxval

  const expected = width * height * channels;
  const payload = data.subarray(pos, pos + expected);
  if (payload.length !== expected) {
    throw new PnmError(
      `truncated payload: expected ${expected} bytes, got ${payload.length}`,
      pos + payload.length,
    );
  }
  return { width, height, channels: channels as 1 | 3, pixels: new Uint8Array(payload) };
}

export function encodePnmColor(width: number, height: number, rgb: Uint8Array): Uint8Array {
  if (rgb.length !== width * height * 3) {
    throw new Error(`pixel buffer length ${rgb.length} != ${width}x${height}x3`);
  }
  const header = new TextEncoder().encode(`P6\n${width} ${height}\n255\n`);
  const out = new Uint8Array(header.length + rgb.length);
  out.set(header);
  out.set(rgb, header.length);
  return out;
}

/** Expands a decoded image into RGBA suitable for a canvas ImageData. */
export function toRgba(img: PnmImage): Uint8ClampedArray {
  const out = new Uint8ClampedArray(img.width * img.height * 4);
  const n = img.width * img.height;
  for (let i = 0; i < n; i++) {
    const o = i * 4;
    if (img.channels === 1) {
      const v = img.pixels[i];
      out[o] = v;
      out[o + 1] = v;
      out[o + 2] = v;
    } else {
      out[o] = img.pixels[i * 3];
      out[o + 1] = img.pixels[i * 3 + 1];
      out[o + 2] = img.pixels[i * 3 + 2];
    }
    out[o + 3] = 255;
  }
  return out;
}

export function bytesToBase64(bytes: Uint8Array): string {
  let binary = '';
  const chunk = 0x8000;
  for (let i = 0; i < bytes.length; i += chunk) {
    binary += String.fromCharCode(...bytes.subarray(i, i + chunk));
  }
  return btoa(binary);
}

export function base64ToBytes(b64: string): Uint8Array {
  const binary = atob(b64);
  const out = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) out[i] = binary.charCodeAt(i);
  return out;
}
