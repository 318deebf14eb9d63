export interface ModelInfo {
  id: string;
  kind: "analytic" | "neural";
  shape: number[];
  T: number;
  max_factor: number;
}

export interface JobRequest {
  model: string;
  reference: string; // base64 P5/P6 pixmap
  factor: number;
  kernel: string;
  stop_step: number;
  count: number;
  seed?: number;
}

export interface JobResults {
  samples: string[]; // base64 pixmaps
  lowfreq_error: number[];
  diversity: number;
}

export interface JobSnapshot {
  id: string;
  state: "queued" | "running" | "done" | "failed";
  progress: { sample?: number; t?: number; count?: number };
  config: Record<string, unknown>;
  results?: JobResults;
  error?: string;
}

export interface Point {
  x: number;
  y: number;
}

export interface Stroke {
  color: [number, number, number];
  width: number;
  points: Point[];
}
