import { describe, expect, it } from "vitest";

import { buildJobRequest, pollJob, submitJob } from "../src/api";
import { base64ToBytes, bytesToBase64 } from "../src/base64";
import { decodePixmap, encodePixmap } from "../src/pixmap";
import { addStroke, initialState, jobFinished, loadReference, setConditionedFraction, setFactor, setModels } from "../src/state";
import { JobSnapshot, ModelInfo } from "../src/types";

const MODEL: ModelInfo = { id: "toy", kind: "analytic", shape: [1, 16, 16], T: 200, max_factor: 16 };

function referenceBytes(): Uint8Array {
  return encodePixmap({
    width: 16,
    height: 16,
    channels: 1,
    pixels: new Uint8Array(256).map((_, i) => (i * 7) % 256),
  });
}

function readyState() {
  const state = initialState();
  setModels(state, [MODEL]);
  loadReference(state, referenceBytes());
  return state;
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("buildJobRequest", () => {
  it("empty scribble layer sends the loaded reference byte-for-byte", () => {
    const state = readyState();
    const req = buildJobRequest(state, MODEL.T);
    expect(base64ToBytes(req.reference)).toEqual(referenceBytes());
  });

  it("maps sliders: N=1 at full range -> {factor: 1, stop_step: 0}", () => {
    const state = readyState();
    setFactor(state, 1);
    setConditionedFraction(state, 1.0);
    const req = buildJobRequest(state, MODEL.T);
    expect(req.factor).toBe(1);
    expect(req.stop_step).toBe(0);
  });

  it("one white stroke over a black reference changes exactly the stroked pixels", () => {
    const state = initialState();
    setModels(state, [MODEL]);
    const black = encodePixmap({ width: 16, height: 16, channels: 1, pixels: new Uint8Array(256) });
    loadReference(state, black);
    addStroke(state, {
      color: [255, 255, 255],
      width: 1,
      points: [{ x: 4, y: 8 }, { x: 11, y: 8 }],
    });
    const req = buildJobRequest(state, MODEL.T);
    const sent = decodePixmap(base64ToBytes(req.reference));
    const diffs: number[] = [];
    sent.pixels.forEach((v, i) => {
      if (v !== 0) diffs.push(i);
    });
    expect(diffs.length).toBeGreaterThan(0);
    for (const idx of diffs) {
      expect(sent.pixels[idx]).toBe(255);
      expect(Math.floor(idx / 16)).toBe(8);
    }
  });

  it("refuses to build without a reference", () => {
    const state = initialState();
    setModels(state, [MODEL]);
    expect(() => buildJobRequest(state, MODEL.T)).toThrow(/no reference/);
  });

  it("omits the seed when the service should assign one", () => {
    const state = readyState();
    expect("seed" in buildJobRequest(state, MODEL.T)).toBe(false);
    state.seed = 42;
    expect(buildJobRequest(state, MODEL.T).seed).toBe(42);
  });
});

describe("submit and poll", () => {
  it("studio round trip: stroke, submit, poll -> gallery tiles with badges", async () => {
    const state = readyState();
    addStroke(state, { color: [255, 255, 255], width: 1, points: [{ x: 2, y: 2 }] });
    setFactor(state, 4);
    state.count = 4;
    state.seed = 9;

    const sampleB64 = bytesToBase64(referenceBytes());
    const done: JobSnapshot = {
      id: "job-000001",
      state: "done",
      progress: { sample: 3, t: 0, count: 4 },
      config: { factor: 4, stop_step: 0, kernel: "box" },
      results: {
        samples: [sampleB64, sampleB64, sampleB64, sampleB64],
        lowfreq_error: [1e-17, 2e-17, 3e-17, 4e-17],
        diversity: 0.118,
      },
    };
    const calls: string[] = [];
    let polls = 0;
    const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
      calls.push(`${init?.method ?? "GET"} ${url}`);
      if (url.endsWith("/api/jobs") && init?.method === "POST") {
        const body = JSON.parse(String(init.body));
        expect(body.factor).toBe(4);
        expect(body.count).toBe(4);
        return jsonResponse({ id: "job-000001" });
      }
      polls += 1;
      return jsonResponse(polls < 3 ? { ...done, state: "running", results: undefined } : done);
    };

    const req = buildJobRequest(state, MODEL.T);
    const jobId = await submitJob("", req, fetchFn);
    const snap = await pollJob("", jobId, { fetchFn, sleep: async () => {} });
    jobFinished(state, snap);

    expect(state.gallery).toHaveLength(1);
    expect(state.gallery[0].images).toHaveLength(4);
    expect(state.gallery[0].lowfreqError).toHaveLength(4);
    expect(state.gallery[0].diversity).toBeCloseTo(0.118);
    expect(calls[0]).toBe("POST /api/jobs");
  });

  it("failed jobs surface the server's error text", async () => {
    const state = readyState();
    const failed: JobSnapshot = {
      id: "job-000009",
      state: "failed",
      progress: {},
      config: {},
      error: "boom: bad reference",
    };
    const snap = await pollJob("", "job-000009", {
      fetchFn: async () => jsonResponse(failed),
      sleep: async () => {},
    });
    jobFinished(state, snap);
    expect(state.error).toContain("boom: bad reference");
  });

  it("submit surfaces HTTP error details", async () => {
    const state = readyState();
    const req = buildJobRequest(state, MODEL.T);
    await expect(
      submitJob("", req, async () => jsonResponse({ detail: "unknown model 'x'" }, 404))
    ).rejects.toThrow(/unknown model/);
  });

  it("polling retries network failures with backoff, then surfaces them", async () => {
    const sleeps: number[] = [];
    let attempts = 0;
    await expect(
      pollJob("", "job-1", {
        intervalMs: 500,
        maxFailures: 5,
        fetchFn: async () => {
          attempts += 1;
          throw new Error("connection refused");
        },
        sleep: async (ms) => {
          sleeps.push(ms);
        },
      })
    ).rejects.toThrow(/lost contact/);
    expect(attempts).toBe(5);
    expect(sleeps).toEqual([1000, 2000, 4000, 8000]); // doubling backoff
  });

  it("a flaky poll recovers if failures stay under the limit", async () => {
    let attempts = 0;
    const done: JobSnapshot = {
      id: "job-2",
      state: "done",
      progress: {},
      config: { factor: 2, stop_step: 0, kernel: "box" },
      results: { samples: [], lowfreq_error: [], diversity: 0 },
    };
    const snap = await pollJob("", "job-2", {
      fetchFn: async () => {
        attempts += 1;
        if (attempts <= 2) throw new Error("flake");
        return jsonResponse(done);
      },
      sleep: async () => {},
    });
    expect(snap.state).toBe("done");
  });
});
