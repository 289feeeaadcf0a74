/** Shared payload and view-state types for the explorer. */

/** One embedding row's provenance: where its window was cut. */
export interface WindowRef {
  start: number;
  length: number;
  source: string;
}

/** Half-open time range [start, stop) in (bucketed) series indices. */
export interface TimeRange {
  start: number;
  stop: number;
}

/** Scatter brush region in data coordinates. */
export interface Region {
  x0: number;
  x1: number;
  y0: number;
  y1: number;
}

export interface DatasetInfo {
  id: string;
  name: string;
  kind: string;
  length: number;
  channels: string[];
  annotations: Annotations | null;
}

export interface Annotations {
  segments: [number, number, string][];
  anomalies: [number, number][];
  trend_slope: number | null;
}

export interface RunManifest {
  run_id: string;
  kind: string;
  params: Record<string, unknown>;
  config_hash: string;
  status: "pending" | "running" | "done" | "failed";
  error: string | null;
  record: Record<string, unknown> | null;
  artifacts: Record<string, string>;
}

export interface JobStatus {
  run_id: string;
  kind: string;
  status: "pending" | "running" | "done" | "failed";
  progress: number;
  error: string | null;
}

export interface ProjectionParams {
  method: "pca" | "tsne" | "pca_then_tsne";
  perplexity: number;
  iterations: number;
  pca_dims: number;
  seed: number;
}

export type ColorMode = "time-order" | "cluster" | "ground-truth";

/** Serializable UI state: what is loaded and what is selected. */
export interface ViewState {
  datasetId: string | null;
  /** Up to two runs for the zero-shot vs fine-tuned side-by-side. */
  runA: string | null;
  runB: string | null;
  selectedPoints: number[];
  selectedRange: TimeRange | null;
  projection: ProjectionParams;
  colorMode: ColorMode;
  clusterK: number;
}

export const DEFAULT_PROJECTION: ProjectionParams = {
  method: "pca_then_tsne",
  perplexity: 30,
  iterations: 1000,
  pca_dims: 50,
  seed: 0,
};

export function defaultViewState(): ViewState {
  return {
    datasetId: null,
    runA: null,
    runB: null,
    selectedPoints: [],
    selectedRange: null,
    projection: { ...DEFAULT_PROJECTION },
    colorMode: "time-order",
    clusterK: 5,
  };
}

/** Fine-tune launcher form; bounds mirror the service-side validation. */
export interface FinetuneForm {
  datasetId: string;
  preset: string;
  epochs: number;
  trainingPercent: number;
  validPercent: number;
  maskPercent: number;
  mixWindows: boolean;
  nWindows: number;
  seed: number;
}

/** Client-side validation with the same bounds the service enforces;
 * returns human-readable problems, empty when submittable. */
export function validateFinetuneForm(form: FinetuneForm): string[] {
  const problems: string[] = [];
  if (!form.datasetId) problems.push("pick a dataset");
  if (!(form.epochs >= 1)) problems.push("epochs must be >= 1");
  if (!(form.trainingPercent > 0 && form.trainingPercent < 1))
    problems.push("training_percent must be in (0, 1)");
  if (!(form.validPercent > 0 && form.validPercent < 1))
    problems.push("valid_percent must be in (0, 1)");
  if (form.trainingPercent + form.validPercent > 1)
    problems.push("training_percent + valid_percent must be <= 1");
  if (!(form.maskPercent > 0 && form.maskPercent < 1))
    problems.push("mask_percent must be in (0, 1)");
  if (!(form.nWindows >= 0)) problems.push("n_windows must be >= 0");
  return problems;
}
