/** Serializable view state: everything needed to restore a session lives in
 * the URL fragment, so a view is shareable by copying the address bar. */

import type { ColorMode, ProjectionParams, TimeRange, ViewState } from "./types.js";
import { defaultViewState } from "./types.js";

type Listener = (state: ViewState) => void;

export class ViewStateStore {
  private state: ViewState = defaultViewState();
  private listeners: Listener[] = [];

  get(): ViewState {
    return this.state;
  }

  update(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }
}

/** Compact integer-list form: "3,5-9,12" round-trips sorted unique points. */
export function encodeIndexList(indices: number[]): string {
  const sorted = Array.from(new Set(indices)).sort((a, b) => a - b);
  const parts: string[] = [];
  let i = 0;
  while (i < sorted.length) {
    let j = i;
    while (j + 1 < sorted.length && sorted[j + 1] === sorted[j] + 1) j++;
    parts.push(j > i ? `${sorted[i]}-${sorted[j]}` : `${sorted[i]}`);
    i = j + 1;
  }
  return parts.join(",");
}

export function decodeIndexList(text: string): number[] {
  if (!text) return [];
  const out: number[] = [];
  for (const part of text.split(",")) {
    const dash = part.indexOf("-", 1); // negative numbers never appear
    if (dash >= 0) {
      const lo = parseInt(part.slice(0, dash), 10);
      const hi = parseInt(part.slice(dash + 1), 10);
      for (let v = lo; v <= hi; v++) out.push(v);
    } else {
      out.push(parseInt(part, 10));
    }
  }
  return out;
}

export function encodeFragment(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.datasetId) params.set("ds", state.datasetId);
  if (state.runA) params.set("a", state.runA);
  if (state.runB) params.set("b", state.runB);
  if (state.selectedPoints.length) params.set("pts", encodeIndexList(state.selectedPoints));
  if (state.selectedRange) params.set("rng", `${state.selectedRange.start}:${state.selectedRange.stop}`);
  params.set("m", state.projection.method);
  params.set("px", String(state.projection.perplexity));
  params.set("it", String(state.projection.iterations));
  params.set("pd", String(state.projection.pca_dims));
  params.set("sd", String(state.projection.seed));
  params.set("c", state.colorMode);
  params.set("k", String(state.clusterK));
  return params.toString();
}

export function decodeFragment(fragment: string): ViewState {
  const params = new URLSearchParams(fragment.replace(/^#/, ""));
  const state = defaultViewState();
  state.datasetId = params.get("ds");
  state.runA = params.get("a");
  state.runB = params.get("b");
  state.selectedPoints = decodeIndexList(params.get("pts") ?? "");
  const range = params.get("rng");
  if (range) {
    const [start, stop] = range.split(":").map((v) => parseInt(v, 10));
    state.selectedRange = { start, stop } as TimeRange;
  }
  const projection: ProjectionParams = {
    method: (params.get("m") ?? state.projection.method) as ProjectionParams["method"],
    perplexity: parseFloat(params.get("px") ?? String(state.projection.perplexity)),
    iterations: parseInt(params.get("it") ?? String(state.projection.iterations), 10),
    pca_dims: parseInt(params.get("pd") ?? String(state.projection.pca_dims), 10),
    seed: parseInt(params.get("sd") ?? String(state.projection.seed), 10),
  };
  state.projection = projection;
  state.colorMode = (params.get("c") ?? state.colorMode) as ColorMode;
  state.clusterK = parseInt(params.get("k") ?? String(state.clusterK), 10);
  return state;
}
