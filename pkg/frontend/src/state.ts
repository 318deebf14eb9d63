// Single studio state store.  All transitions go through these functions,
// so the invariants (original reference bytes never mutated, gallery rows
// preserved across runs) live in one place.

import { decodePixmap, Pixmap } from "./pixmap";
import { JobSnapshot, ModelInfo, Stroke } from "./types";

export const FACTOR_STOPS = [1, 2, 4, 8, 16];
export const RANGE_STOPS = [1.0, 0.75, 0.5, 0.25]; // conditioned fraction of T

export interface GalleryRow {
  jobId: string;
  factor: number;
  stopStep: number;
  kernel: string;
  images: string[]; // base64 pixmaps
  lowfreqError: number[];
  diversity: number;
}

export interface StudioState {
  models: ModelInfo[];
  selectedModel: string | null;
  referenceBytes: Uint8Array | null; // exact loaded bytes, never touched
  reference: Pixmap | null;
  strokes: Stroke[];
  brushColor: [number, number, number];
  brushWidth: number;
  factor: number;
  conditionedFraction: number; // 1.0 = full-range conditioning (stop_step 0)
  kernel: string;
  count: number;
  seed: number | null;
  pendingJob: string | null;
  gallery: GalleryRow[];
  error: string | null;
}

export function initialState(): StudioState {
  return {
    models: [],
    selectedModel: null,
    referenceBytes: null,
    reference: null,
    strokes: [],
    brushColor: [255, 255, 255],
    brushWidth: 1.5,
    factor: 4,
    conditionedFraction: 1.0,
    kernel: "box",
    count: 4,
    seed: null,
    pendingJob: null,
    gallery: [],
    error: null,
  };
}

export function setModels(state: StudioState, models: ModelInfo[]): void {
  state.models = models;
  if (state.selectedModel === null && models.length > 0) {
    state.selectedModel = models[0].id;
  }
}

export function selectedModel(state: StudioState): ModelInfo | null {
  return state.models.find((m) => m.id === state.selectedModel) ?? null;
}

export function loadReference(state: StudioState, bytes: Uint8Array): void {
  state.reference = decodePixmap(bytes); // validate before committing
  state.referenceBytes = new Uint8Array(bytes);
  state.strokes = [];
  state.error = null;
}

export function addStroke(state: StudioState, stroke: Stroke): void {
  state.strokes = [...state.strokes, stroke];
}

export function clearScribbles(state: StudioState): void {
  state.strokes = [];
}

/** Snap the factor to the slider stops, clamped by the model's bound. */
export function setFactor(state: StudioState, value: number): void {
  const model = selectedModel(state);
  const allowed = FACTOR_STOPS.filter((f) => !model || f <= model.max_factor);
  state.factor = allowed.reduce((best, f) =>
    Math.abs(f - value) < Math.abs(best - value) ? f : best
  );
}

export function setConditionedFraction(state: StudioState, value: number): void {
  state.conditionedFraction = RANGE_STOPS.reduce((best, f) =>
    Math.abs(f - value) < Math.abs(best - value) ? f : best
  );
}

/** stop_step for the current range slider position. */
export function stopStep(state: StudioState, T: number): number {
  return Math.round((1.0 - state.conditionedFraction) * T);
}

export function jobFinished(state: StudioState, snap: JobSnapshot): void {
  state.pendingJob = null;
  if (snap.state === "failed") {
    state.error = snap.error ?? "job failed";
    return;
  }
  if (!snap.results) return;
  state.gallery = [
    ...state.gallery,
    {
      jobId: snap.id,
      factor: Number(snap.config["factor"]),
      stopStep: Number(snap.config["stop_step"]),
      kernel: String(snap.config["kernel"]),
      images: snap.results.samples,
      lowfreqError: snap.results.lowfreq_error,
      diversity: snap.results.diversity,
    },
  ];
}
