// Non-destructive scribble compositing: the reference pixmap is never
// mutated; flattening rasterizes the stroke list over a copy.

import { clonePixmap, Pixmap } from "./pixmap";
import { Point, Stroke } from "./types";

function stamp(target: Pixmap, cx: number, cy: number, radius: number, color: [number, number, number]): void {
  const r = Math.max(radius, 0.5);
  const x0 = Math.max(0, Math.floor(cx - r));
  const x1 = Math.min(target.width - 1, Math.ceil(cx + r));
  const y0 = Math.max(0, Math.floor(cy - r));
  const y1 = Math.min(target.height - 1, Math.ceil(cy + r));
  for (let y = y0; y <= y1; y++) {
    for (let x = x0; x <= x1; x++) {
      const dx = x - cx;
      const dy = y - cy;
      if (dx * dx + dy * dy <= r * r) {
        const base = (y * target.width + x) * target.channels;
        for (let c = 0; c < target.channels; c++) {
          target.pixels[base + c] = color[c] ?? color[0];
        }
      }
    }
  }
}

function stampAlong(target: Pixmap, a: Point, b: Point, stroke: Stroke): void {
  const dist = Math.hypot(b.x - a.x, b.y - a.y);
  const steps = Math.max(1, Math.ceil(dist * 2));
  for (let s = 0; s <= steps; s++) {
    const t = s / steps;
    stamp(target, a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), stroke.width / 2, stroke.color);
  }
}

/** Flatten reference + strokes into a new pixmap; the input stays intact. */
export function compositeStrokes(reference: Pixmap, strokes: Stroke[]): Pixmap {
  const out = clonePixmap(reference);
  for (const stroke of strokes) {
    if (stroke.points.length === 0) continue;
    if (stroke.points.length === 1) {
      stamp(out, stroke.points[0].x, stroke.points[0].y, stroke.width / 2, stroke.color);
      continue;
    }
    for (let i = 0; i + 1 < stroke.points.length; i++) {
      stampAlong(out, stroke.points[i], stroke.points[i + 1], stroke);
    }
  }
  return out;
}

/** Pixel indices (flat, per-channel) where two same-shape pixmaps differ. */
export function changedPixels(a: Pixmap, b: Pixmap): number[] {
  const diffs: number[] = [];
  for (let i = 0; i < a.pixels.length; i++) {
    if (a.pixels[i] !== b.pixels[i]) diffs.push(i);
  }
  return diffs;
}
