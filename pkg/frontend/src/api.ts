// Typed client for the job service plus the request builder that flattens
// the studio state into a wire payload.

import { base64ToBytes, bytesToBase64 } from "./base64";
import { compositeStrokes } from "./composite";
import { encodePixmap } from "./pixmap";
import { selectedModel, stopStep, StudioState } from "./state";
import { JobRequest, JobSnapshot, ModelInfo } from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Flatten reference + scribbles and attach the generation knobs.
 *
 * With no scribbles the payload reuses the loaded reference bytes
 * unchanged, so what the server sees is byte-identical to the file the
 * user picked.
 */
export function buildJobRequest(state: StudioState, T: number): JobRequest {
  if (state.reference === null || state.referenceBytes === null) {
    throw new Error("no reference loaded");
  }
  const model = selectedModel(state);
  if (model === null) {
    throw new Error("no model selected");
  }
  const payload =
    state.strokes.length === 0
      ? state.referenceBytes
      : encodePixmap(compositeStrokes(state.reference, state.strokes));
  const req: JobRequest = {
    model: model.id,
    reference: bytesToBase64(payload),
    factor: state.factor,
    kernel: state.kernel,
    stop_step: stopStep(state, T),
    count: state.count,
  };
  if (state.seed !== null) req.seed = state.seed;
  return req;
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // keep the status text
    }
    throw new Error(`${resp.status}: ${detail}`);
  }
  return (await resp.json()) as T;
}

export async function fetchModels(baseUrl: string, fetchFn: FetchLike = fetch): Promise<ModelInfo[]> {
  return asJson(await fetchFn(`${baseUrl}/api/models`));
}

export async function submitJob(
  baseUrl: string,
  req: JobRequest,
  fetchFn: FetchLike = fetch
): Promise<string> {
  const resp = await fetchFn(`${baseUrl}/api/jobs`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(req),
  });
  return (await asJson<{ id: string }>(resp)).id;
}

export interface PollOptions {
  intervalMs?: number;
  maxFailures?: number;
  fetchFn?: FetchLike;
  sleep?: (ms: number) => Promise<void>;
  onUpdate?: (snap: JobSnapshot) => void;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/** Poll a job until done/failed.
 *
 * Network failures retry with doubling backoff and surface after
 * `maxFailures` consecutive misses; a successful poll resets the count.
 */
export async function pollJob(
  baseUrl: string,
  jobId: string,
  options: PollOptions = {}
): Promise<JobSnapshot> {
  const interval = options.intervalMs ?? 500;
  const maxFailures = options.maxFailures ?? 5;
  const fetchFn = options.fetchFn ?? fetch;
  const sleep = options.sleep ?? defaultSleep;
  let failures = 0;
  for (;;) {
    let snap: JobSnapshot | null = null;
    try {
      snap = await asJson<JobSnapshot>(await fetchFn(`${baseUrl}/api/jobs/${jobId}`));
      failures = 0;
    } catch (err) {
      failures += 1;
      if (failures >= maxFailures) {
        throw new Error(`lost contact with the job service: ${String(err)}`);
      }
      await sleep(interval * 2 ** failures);
      continue;
    }
    options.onUpdate?.(snap);
    if (snap.state === "done" || snap.state === "failed") {
      return snap;
    }
    await sleep(interval);
  }
}

export function decodeSample(b64: string): Uint8Array {
  return base64ToBytes(b64);
}
