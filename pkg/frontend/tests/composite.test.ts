import { describe, expect, it } from "vitest";

import { changedPixels, compositeStrokes } from "../src/composite";
import { Pixmap } from "../src/pixmap";
import { Stroke } from "../src/types";

function black16(): Pixmap {
  return { width: 16, height: 16, channels: 1, pixels: new Uint8Array(256) };
}

describe("scribble compositing", () => {
  it("empty stroke list returns identical pixels and leaves the input alone", () => {
    const ref = black16();
    const flat = compositeStrokes(ref, []);
    expect(flat.pixels).toEqual(ref.pixels);
    expect(flat.pixels).not.toBe(ref.pixels); // a copy, not the same buffer
  });

  it("one white stroke changes exactly the stroked pixels", () => {
    const ref = black16();
    const stroke: Stroke = {
      color: [255, 255, 255],
      width: 1,
      points: [
        { x: 2, y: 3 },
        { x: 6, y: 3 },
      ],
    };
    const flat = compositeStrokes(ref, [stroke]);
    const diffs = changedPixels(ref, flat);
    expect(diffs.length).toBeGreaterThan(0);
    for (const idx of diffs) {
      const y = Math.floor(idx / 16);
      const x = idx % 16;
      expect(flat.pixels[idx]).toBe(255);
      expect(y).toBe(3); // width-1 horizontal stroke stays on its row
      expect(x).toBeGreaterThanOrEqual(2);
      expect(x).toBeLessThanOrEqual(6);
    }
    // the original reference is untouched
    expect([...ref.pixels].every((v) => v === 0)).toBe(true);
  });

  it("single-point strokes stamp a dot", () => {
    const ref = black16();
    const flat = compositeStrokes(ref, [
      { color: [200, 0, 0], width: 1, points: [{ x: 8, y: 8 }] },
    ]);
    expect(flat.pixels[8 * 16 + 8]).toBe(200);
  });

  it("strokes clip at image borders", () => {
    const ref = black16();
    const flat = compositeStrokes(ref, [
      { color: [255, 255, 255], width: 4, points: [{ x: 0, y: 0 }, { x: -3, y: -3 }] },
    ]);
    expect(flat.pixels.length).toBe(256);
    expect(flat.pixels[0]).toBe(255);
  });

  it("later strokes paint over earlier ones", () => {
    const ref = black16();
    const a: Stroke = { color: [100, 0, 0], width: 1, points: [{ x: 5, y: 5 }] };
    const b: Stroke = { color: [250, 0, 0], width: 1, points: [{ x: 5, y: 5 }] };
    const flat = compositeStrokes(ref, [a, b]);
    expect(flat.pixels[5 * 16 + 5]).toBe(250);
  });

  it("writes all channels of a color pixmap", () => {
    const ref: Pixmap = { width: 4, height: 4, channels: 3, pixels: new Uint8Array(48) };
    const flat = compositeStrokes(ref, [
      { color: [10, 20, 30], width: 1, points: [{ x: 1, y: 1 }] },
    ]);
    const base = (1 * 4 + 1) * 3;
    expect([...flat.pixels.slice(base, base + 3)]).toEqual([10, 20, 30]);
  });
});
