// Binary portable pixmaps (P5 grayscale / P6 color, maxval 255) — the wire
// format the job service speaks.  Row-major pixels, interleaved channels.

export interface Pixmap {
  width: number;
  height: number;
  channels: 1 | 3;
  pixels: Uint8Array;
}

function isSpace(byte: number): boolean {
  return byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d || byte === 0x0c;
}

export function decodePixmap(bytes: Uint8Array): Pixmap {
  const kind = String.fromCharCode(bytes[0] ?? 0, bytes[1] ?? 0);
  if (kind !== "P5" && kind !== "P6") {
    throw new Error(`not a binary pixmap (starts ${JSON.stringify(kind)})`);
  }
  const channels = kind === "P5" ? 1 : 3;

  const fields: number[] = [];
  let pos = 2;
  while (fields.length < 3) {
    if (pos >= bytes.length) throw new Error("pixmap header ended early");
    const b = bytes[pos];
    if (b === 0x23 /* '#' */) {
      while (pos < bytes.length && bytes[pos] !== 0x0a) pos++;
      pos++;
    } else if (isSpace(b)) {
      pos++;
    } else {
      let end = pos;
      while (end < bytes.length && !isSpace(bytes[end])) end++;
      const token = String.fromCharCode(...bytes.subarray(pos, end));
      if (!/^\d+$/.test(token)) throw new Error(`bad pixmap header token ${token}`);
      fields.push(parseInt(token, 10));
      pos = end;
    }
  }
  if (pos >= bytes.length || !isSpace(bytes[pos])) {
    throw new Error("missing separator before pixmap payload");
  }
  pos++;

  const [width, height, maxval] = fields;
  if (maxval !== 255) throw new Error(`unsupported maxval ${maxval} (need 255)`);
  const n = width * height * channels;
  if (bytes.length - pos < n) {
    throw new Error(`pixmap payload holds ${bytes.length - pos} of ${n} bytes`);
  }
  return { width, height, channels, pixels: bytes.slice(pos, pos + n) };
}

export function encodePixmap(p: Pixmap): Uint8Array {
  const kind = p.channels === 1 ? "P5" : "P6";
  const header = `${kind}\n${p.width} ${p.height}\n255\n`;
  const out = new Uint8Array(header.length + p.pixels.length);
  for (let i = 0; i < header.length; i++) out[i] = header.charCodeAt(i);
  out.set(p.pixels, header.length);
  return out;
}

export function clonePixmap(p: Pixmap): Pixmap {
  return { ...p, pixels: new Uint8Array(p.pixels) };
}
