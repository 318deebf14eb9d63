import { describe, expect, it } from "vitest";

import { base64ToBytes, bytesToBase64 } from "../src/base64";
import { decodePixmap, encodePixmap, Pixmap } from "../src/pixmap";

function ascii(text: string): Uint8Array {
  return new Uint8Array([...text].map((c) => c.charCodeAt(0)));
}

function gray(width: number, height: number, fill: (i: number) => number): Pixmap {
  return {
    width,
    height,
    channels: 1,
    pixels: new Uint8Array(width * height).map((_, i) => fill(i)),
  };
}

describe("base64", () => {
  it("round-trips arbitrary byte lengths", () => {
    for (const n of [0, 1, 2, 3, 4, 17, 256]) {
      const bytes = new Uint8Array(n).map((_, i) => (i * 37 + 5) % 256);
      expect(base64ToBytes(bytesToBase64(bytes))).toEqual(bytes);
    }
  });

  it("matches the canonical encoding", () => {
    expect(bytesToBase64(ascii("Man"))).toBe("TWFu");
    expect(bytesToBase64(ascii("Ma"))).toBe("TWE=");
    expect(bytesToBase64(ascii("M"))).toBe("TQ==");
  });

  it("rejects invalid characters", () => {
    expect(() => base64ToBytes("ab!c")).toThrow(/invalid base64/);
  });
});

describe("pixmap codec", () => {
  it("decodes the canonical P5 layout", () => {
    const blob = new Uint8Array([...ascii("P5\n2 1\n255\n"), 0, 255]);
    const pix = decodePixmap(blob);
    expect(pix).toMatchObject({ width: 2, height: 1, channels: 1 });
    expect([...pix.pixels]).toEqual([0, 255]);
  });

  it("handles comments and loose whitespace in headers", () => {
    const blob = new Uint8Array([...ascii("P5\n# hi\n 2 # w\n1\n255\n"), 7, 9]);
    expect([...decodePixmap(blob).pixels]).toEqual([7, 9]);
  });

  it("encode(decode(x)) is byte-identical for canonical files", () => {
    const original = new Uint8Array([...ascii("P5\n3 2\n255\n"), 1, 2, 3, 4, 5, 6]);
    expect(encodePixmap(decodePixmap(original))).toEqual(original);
  });

  it("round-trips P6 color", () => {
    const pix: Pixmap = {
      width: 2,
      height: 2,
      channels: 3,
      pixels: new Uint8Array(12).map((_, i) => i * 20),
    };
    expect(decodePixmap(encodePixmap(pix))).toEqual(pix);
  });

  it("rejects bad magic, bad maxval, truncated payloads", () => {
    expect(() => decodePixmap(ascii("P4\n1 1\n255\n"))).toThrow(/not a binary pixmap/);
    expect(() => decodePixmap(new Uint8Array([...ascii("P5\n1 1\n65535\n"), 0, 0])))
      .toThrow(/maxval/);
    expect(() => decodePixmap(new Uint8Array([...ascii("P5\n2 2\n255\n"), 0])))
      .toThrow(/payload holds/);
  });

  it("survives a gray gradient round trip", () => {
    const pix = gray(16, 16, (i) => i % 256);
    expect(decodePixmap(encodePixmap(pix))).toEqual(pix);
  });
});
