import { describe, expect, it } from 'vitest';

import {
  base64ToBytes,
  bytesToBase64,
  decodePnm,
  encodePnmColor,
  PnmError,
  toRgba,
} from '../src/pnm.js';

function pgm(width: number, height: number, pixels: number[]): Uint8Array {
  const header = new TextEncoder().encode(`P5\n${width} ${height}\n255\n`);
  return Uint8Array.from([...header, ...pixels]);
}

describe('decodePnm', () => {
  it('parses a P5 grayscale image', () => {
    const img = decodePnm(pgm(2, 2, [0, 64, 128, 255]));
    expect(img.width).toBe(2);
    expect(img.height).toBe(2);
    expect(img.channels).toBe(1);
    expect([...img.pixels]).toEqual([0, 64, 128, 255]);
  });

  it('parses a P6 color image', () => {
    const bytes = encodePnmColor(1, 2, Uint8Array.from([1, 2, 3, 4, 5, 6]));
    const img = decodePnm(bytes);
    expect(img.channels).toBe(3);
    expect([...img.pixels]).toEqual([1, 2, 3, 4, 5, 6]);
  });

  it('skips header comments', () => {
    const blob = new TextEncoder().encode('P5\n# made by a scanner\n1 1\n255\n');
    const img = decodePnm(Uint8Array.from([...blob, 42]));
    expect(img.pixels[0]).toBe(42);
  });

  it('rejects non-255 maxval with the offending value', () => {
    const blob = new TextEncoder().encode('P5\n1 1\n65535\n\0');
    expect(() => decodePnm(Uint8Array.from(blob))).toThrow(/unsupported maxval 65535/);
  });

  it('rejects truncated payloads with byte counts', () => {
    expect(() => decodePnm(pgm(4, 4, [0, 0, 0]))).toThrow(/expected 16 bytes, got 3/);
  });

  it('rejects bad magic', () => {
    const blob = new TextEncoder().encode('P3\n1 1\n255\n0');
    expect(() => decodePnm(Uint8Array.from(blob))).toThrow(PnmError);
  });

  it('round-trips through base64', () => {
    const bytes = pgm(2, 1, [9, 200]);
    expect([...base64ToBytes(bytesToBase64(bytes))]).toEqual([...bytes]);
  });
});

describe('toRgba', () => {
  it('expands grayscale to opaque RGBA', () => {
    const rgba = toRgba(decodePnm(pgm(1, 1, [7])));
    expect([...rgba]).toEqual([7, 7, 7, 255]);
  });

  it('keeps color channels in order', () => {
    const img = decodePnm(encodePnmColor(1, 1, Uint8Array.from([10, 20, 30])));
    expect([...toRgba(img)]).toEqual([10, 20, 30, 255]);
  });
});
