// DOM wiring for the studio: canvas scribbling over a reference, factor and
// conditioning-range sliders, job submission and the comparison gallery.
// All state transitions and wire handling live in the imported modules;
// this file only binds them to elements.

import { buildJobRequest, decodeSample, fetchModels, pollJob, submitJob } from "./api";
import { compositeStrokes } from "./composite";
import { decodePixmap, encodePixmap, Pixmap } from "./pixmap";
import {
  addStroke,
  clearScribbles,
  FACTOR_STOPS,
  initialState,
  jobFinished,
  loadReference,
  RANGE_STOPS,
  selectedModel,
  setConditionedFraction,
  setFactor,
  setModels,
} from "./state";
import { Stroke } from "./types";

const BASE_URL = "";
const SCALE = 16;

const state = initialState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function drawPixmap(canvas: HTMLCanvasElement, pix: Pixmap, scale: number): void {
  canvas.width = pix.width * scale;
  canvas.height = pix.height * scale;
  const ctx = canvas.getContext("2d")!;
  ctx.imageSmoothingEnabled = false;
  const tile = new OffscreenCanvas(pix.width, pix.height);
  const tctx = tile.getContext("2d")!;
  const img = tctx.createImageData(pix.width, pix.height);
  for (let i = 0; i < pix.width * pix.height; i++) {
    const base = i * pix.channels;
    img.data[i * 4] = pix.pixels[base];
    img.data[i * 4 + 1] = pix.pixels[base + (pix.channels === 3 ? 1 : 0)];
    img.data[i * 4 + 2] = pix.pixels[base + (pix.channels === 3 ? 2 : 0)];
    img.data[i * 4 + 3] = 255;
  }
  tctx.putImageData(img, 0, 0);
  ctx.drawImage(tile, 0, 0, canvas.width, canvas.height);
}

function renderReference(): void {
  const canvas = el<HTMLCanvasElement>("reference-canvas");
  if (!state.reference) return;
  drawPixmap(canvas, compositeStrokes(state.reference, state.strokes), SCALE);
}

function renderControls(): void {
  el<HTMLSpanElement>("factor-value").textContent = `N = ${state.factor}`;
  const T = selectedModel(state)?.T ?? 200;
  const stop = Math.round((1 - state.conditionedFraction) * T);
  el<HTMLSpanElement>("range-value").textContent =
    `steps ${T}..${stop} (${Math.round(state.conditionedFraction * 100)}%)`;
  el<HTMLButtonElement>("submit").disabled = state.reference === null || state.pendingJob !== null;
}

function renderError(): void {
  const banner = el<HTMLDivElement>("error-banner");
  banner.textContent = state.error ?? "";
  banner.style.display = state.error ? "block" : "none";
}

function renderStatus(text: string): void {
  el<HTMLSpanElement>("status").textContent = text;
}

function renderGallery(): void {
  const root = el<HTMLDivElement>("gallery");
  root.replaceChildren();
  for (const row of [...state.gallery].reverse()) {
    const rowDiv = document.createElement("div");
    rowDiv.className = "gallery-row";
    const label = document.createElement("div");
    label.className = "row-label";
    label.textContent =
      `${row.jobId} · N=${row.factor} · stop=${row.stopStep} · ${row.kernel} · ` +
      `diversity ${row.diversity.toFixed(4)}`;
    rowDiv.appendChild(label);
    const strip = document.createElement("div");
    strip.className = "row-strip";
    row.images.forEach((b64, k) => {
      const tile = document.createElement("figure");
      tile.className = "tile";
      const canvas = document.createElement("canvas");
      drawPixmap(canvas, decodePixmap(decodeSample(b64)), 8);
      const badge = document.createElement("figcaption");
      badge.className = "badge";
      badge.textContent = `lf ${row.lowfreqError[k].toExponential(1)}`;
      tile.appendChild(canvas);
      tile.appendChild(badge);
      strip.appendChild(tile);
    });
    rowDiv.appendChild(strip);
    root.appendChild(rowDiv);
  }
}

function canvasPoint(canvas: HTMLCanvasElement, ev: PointerEvent) {
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((ev.clientX - rect.left) / rect.width) * (state.reference?.width ?? 1),
    y: ((ev.clientY - rect.top) / rect.height) * (state.reference?.height ?? 1),
  };
}

function bindScribbling(): void {
  const canvas = el<HTMLCanvasElement>("reference-canvas");
  let active: Stroke | null = null;
  canvas.addEventListener("pointerdown", (ev) => {
    if (!state.reference) return;
    canvas.setPointerCapture(ev.pointerId);
    active = { color: state.brushColor, width: state.brushWidth, points: [canvasPoint(canvas, ev)] };
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!active || !state.reference) return;
    active.points.push(canvasPoint(canvas, ev));
    drawPixmap(canvas, compositeStrokes(state.reference, [...state.strokes, active]), SCALE);
  });
  canvas.addEventListener("pointerup", () => {
    if (active) {
      addStroke(state, active);
      active = null;
      renderReference();
    }
  });
}

async function onSubmit(): Promise<void> {
  const model = selectedModel(state);
  if (!model) return;
  state.error = null;
  try {
    const req = buildJobRequest(state, model.T);
    const jobId = await submitJob(BASE_URL, req);
    state.pendingJob = jobId;
    renderControls();
    renderStatus(`submitted ${jobId}`);
    const snap = await pollJob(BASE_URL, jobId, {
      onUpdate: (s) => {
        if (s.state === "running" && s.progress.t !== undefined) {
          renderStatus(`${jobId}: sample ${(s.progress.sample ?? 0) + 1}/${s.progress.count}, t=${s.progress.t}`);
        }
      },
    });
    jobFinished(state, snap);
    renderStatus(snap.state === "done" ? `${jobId} done` : `${jobId} failed`);
  } catch (err) {
    state.pendingJob = null;
    state.error = String(err);
  }
  renderControls();
  renderError();
  renderGallery();
}

function blankReference(): void {
  const model = selectedModel(state);
  if (!model || model.shape.length !== 3) return;
  const [c, h, w] = model.shape;
  const channels = c === 3 ? 3 : 1;
  const pix: Pixmap = {
    width: w,
    height: h,
    channels: channels as 1 | 3,
    pixels: new Uint8Array(w * h * channels).fill(128),
  };
  loadReference(state, encodePixmap(pix));
  renderReference();
  renderControls();
}

async function init(): Promise<void> {
  try {
    setModels(state, await fetchModels(BASE_URL));
  } catch (err) {
    state.error = `cannot reach the job service: ${String(err)}`;
    renderError();
    return;
  }
  const select = el<HTMLSelectElement>("model-select");
  select.replaceChildren(
    ...state.models.map((m) => {
      const opt = document.createElement("option");
      opt.value = m.id;
      opt.textContent = `${m.id} (${m.kind}, ${m.shape.join("x")})`;
      return opt;
    })
  );
  select.addEventListener("change", () => {
    state.selectedModel = select.value;
    setFactor(state, state.factor);
    renderControls();
  });

  el<HTMLInputElement>("file-input").addEventListener("change", async (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (!file) return;
    try {
      loadReference(state, new Uint8Array(await file.arrayBuffer()));
      renderReference();
    } catch (err) {
      state.error = String(err);
      renderError();
    }
    renderControls();
  });

  const factorSlider = el<HTMLInputElement>("factor-slider");
  factorSlider.max = String(FACTOR_STOPS.length - 1);
  factorSlider.addEventListener("input", () => {
    setFactor(state, FACTOR_STOPS[Number(factorSlider.value)]);
    renderControls();
  });

  const rangeSlider = el<HTMLInputElement>("range-slider");
  rangeSlider.max = String(RANGE_STOPS.length - 1);
  rangeSlider.addEventListener("input", () => {
    setConditionedFraction(state, RANGE_STOPS[Number(rangeSlider.value)]);
    renderControls();
  });

  el<HTMLInputElement>("count-input").addEventListener("change", (ev) => {
    state.count = Math.max(1, Number((ev.target as HTMLInputElement).value) || 1);
  });
  el<HTMLInputElement>("seed-input").addEventListener("change", (ev) => {
    const raw = (ev.target as HTMLInputElement).value.trim();
    state.seed = raw === "" ? null : Number(raw);
  });
  el<HTMLInputElement>("brush-value").addEventListener("change", (ev) => {
    const v = Math.max(0, Math.min(255, Number((ev.target as HTMLInputElement).value) || 0));
    state.brushColor = [v, v, v];
  });
  el<HTMLInputElement>("brush-width").addEventListener("change", (ev) => {
    state.brushWidth = Math.max(0.5, Number((ev.target as HTMLInputElement).value) || 1);
  });

  el<HTMLButtonElement>("clear-scribbles").addEventListener("click", () => {
    clearScribbles(state);
    renderReference();
  });
  el<HTMLButtonElement>("blank-reference").addEventListener("click", blankReference);
  el<HTMLButtonElement>("submit").addEventListener("click", () => void onSubmit());

  bindScribbling();
  renderControls();
  renderError();
}

void init();
