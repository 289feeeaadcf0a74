/** App wiring: dataset picker, run launcher, linked views, shareable URL. */

import { WorkbenchClient } from "./api.js";
import { SharedBrush } from "./compare.js";
import { kmeans2d } from "./kmeans.js";
import {
  pointsInRegion,
  pointsOverlappingRange,
  slicesFromSpec,
  windowExtents,
} from "./linking.js";
import { drawParallelCoordinates } from "./parallel.js";
import { ScatterView } from "./scatter.js";
import { decodeFragment, encodeFragment, ViewStateStore } from "./state.js";
import { StripView } from "./strip.js";
import type { Region, TimeRange, ViewState, WindowRef } from "./types.js";
import { validateFinetuneForm } from "./types.js";

const client = new WorkbenchClient("");
const store = new ViewStateStore();

interface LoadedRun {
  runId: string;
  coords: Float64Array;
  slices: WindowRef[];
  checksum: string;
  verified: boolean;
  bucket: number;
  view?: ScatterView;
}

const loaded: { a: LoadedRun | null; b: LoadedRun | null; strip: StripView | null } = {
  a: null,
  b: null,
  strip: null,
};
const sharedBrush = new SharedBrush();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function notify(message: string, isError = false): void {
  const bar = el<HTMLDivElement>("notices");
  bar.textContent = message;
  bar.className = isError ? "notice error" : "notice";
  if (!isError) setTimeout(() => (bar.textContent = ""), 6000);
}

async function refreshDatasets(): Promise<void> {
  const datasets = await client.listDatasets();
  const select = el<HTMLSelectElement>("dataset-select");
  select.innerHTML = "";
  for (const dataset of datasets) {
    const option = document.createElement("option");
    option.value = dataset.id;
    option.textContent = `${dataset.name} (${dataset.kind}, T=${dataset.length})`;
    select.appendChild(option);
  }
  const state = store.get();
  if (state.datasetId) select.value = state.datasetId;
}

async function loadStrip(datasetId: string, bucket: number): Promise<void> {
  // the strip always shows the raw series so the ground-truth overlays
  // render untransformed; provenance is in bucketed units, so highlight
  // ranges are scaled by the embed bucket at this boundary only
  const body = await client.datasetValues(datasetId, { bucket: 1 });
  currentAnnotations = body.annotations;
  stripBucket = bucket;
  loaded.strip = new StripView(
    el<HTMLCanvasElement>("strip-canvas"),
    body.values,
    body.annotations,
    {
      onBrush(rawRange: TimeRange | null) {
        store.update({ selectedRange: rawRange, selectedPoints: [] });
        if (!rawRange) {
          sharedBrush.clear();
          loaded.strip?.setHighlights([]);
          return;
        }
        const runA = loaded.a;
        if (!runA) return;
        const bucketed = {
          start: Math.floor(rawRange.start / stripBucket),
          stop: Math.max(Math.floor(rawRange.start / stripBucket) + 1, Math.ceil(rawRange.stop / stripBucket)),
        };
        const points = pointsOverlappingRange(runA.slices, bucketed);
        store.update({ selectedPoints: points });
        sharedBrush.select(0, points);
        loaded.strip?.setHighlights([rawRange]);
      },
    },
  );
}

let stripBucket = 1;

function toRawRanges(ranges: TimeRange[]): TimeRange[] {
  return ranges.map((r) => ({ start: r.start * stripBucket, stop: r.stop * stripBucket }));
}

function scatterCallbacks(slot: "a" | "b") {
  return {
    onBrush(region: Region | null) {
      const run = loaded[slot];
      if (!run) return;
      if (!region) {
        store.update({ selectedPoints: [], selectedRange: null });
        sharedBrush.clear();
        loaded.strip?.setHighlights([]);
        return;
      }
      const indices = pointsInRegion(run.coords, region);
      store.update({ selectedPoints: indices, selectedRange: null });
      sharedBrush.select(slot === "a" ? 0 : 1, indices);
      loaded.strip?.setHighlights(toRawRanges(windowExtents(run.slices, indices)));
    },
  };
}

async function loadRun(slot: "a" | "b", runId: string): Promise<void> {
  const state = store.get();
  const manifest = await client.manifest(runId);
  if (manifest.kind !== "embed") {
    notify(`run ${runId} is not an embedding run`, true);
    return;
  }
  const params = manifest.params as { window: number; stride: number; bucket?: number; dataset_id: string };
  const record = manifest.record as { n_windows: number } | null;
  const projection = await client.projection(runId, state.projection).catch(async (err) => {
    notify(`no stored projection; submitting a project job (${err.status ?? ""})`);
    const { run_id } = await client.submitJob("project", {
      embed_run: runId,
      method: state.projection.method,
      perplexity: state.projection.perplexity,
      iterations: state.projection.iterations,
      pca_dims: state.projection.pca_dims,
      seed: state.projection.seed,
    });
    await client.waitJob(run_id, (p) => progress(`projecting ${Math.round(p * 100)}%`));
    return client.projection(runId, state.projection);
  });
  const n = record?.n_windows ?? projection.matrix.n;
  const coords = projection.matrix.data;
  const slices = slicesFromSpec(n, params.window, params.stride, params.dataset_id);
  const run: LoadedRun = {
    runId,
    coords,
    slices,
    checksum: projection.checksum,
    verified: projection.verified,
    bucket: params.bucket ?? 1,
  };
  const canvas = el<HTMLCanvasElement>(`scatter-${slot}`);
  run.view = new ScatterView(canvas, coords, scatterCallbacks(slot));
  loaded[slot] = run;
  el<HTMLSpanElement>(`checksum-${slot}`).textContent = `payload sha256 ${run.checksum.slice(0, 16)}…`;
  applyColorMode();
  rebuildSharedBrush();
  if (slot === "a") {
    await loadStrip(params.dataset_id, run.bucket);
  }
}

function rebuildSharedBrush(): void {
  sharedBrush.reset();
  for (const slot of ["a", "b"] as const) {
    const run = loaded[slot];
    if (run?.view) {
      sharedBrush.register({ slices: run.slices, setHighlight: (ix) => run.view!.setHighlight(ix) });
    }
  }
}

function applyColorMode(): void {
  const state = store.get();
  for (const slot of ["a", "b"] as const) {
    const run = loaded[slot];
    if (!run?.view) continue;
    if (state.colorMode === "cluster") {
      run.view.setLabels(kmeans2d(run.coords, state.clusterK, state.projection.seed + 1));
    } else if (state.colorMode === "ground-truth") {
      run.view.setLabels(groundTruthLabels(run));
    } else {
      run.view.setLabels(null);
    }
  }
}

function groundTruthLabels(run: LoadedRun): number[] {
  // label each window by the segment its start falls into (0 when none)
  const labels = new Array(run.slices.length).fill(0);
  const meta = currentAnnotations;
  if (!meta) return labels;
  run.slices.forEach((slice, i) => {
    for (let s = 0; s < meta.segments.length; s++) {
      const [a, b] = meta.segments[s];
      if (slice.start >= a && slice.start < b) labels[i] = s + 1;
    }
    for (const [start, length] of meta.anomalies) {
      if (slice.start < start + length && start < slice.start + slice.length) {
        labels[i] = 9; // anomaly color
      }
    }
  });
  return labels;
}

let currentAnnotations: { segments: [number, number, string][]; anomalies: [number, number][] } | null =
  null;

async function launchFinetune(): Promise<void> {
  const form = {
    datasetId: el<HTMLSelectElement>("dataset-select").value,
    preset: el<HTMLSelectElement>("preset").value,
    epochs: parseInt(el<HTMLInputElement>("epochs").value, 10),
    trainingPercent: parseFloat(el<HTMLInputElement>("train-percent").value),
    validPercent: parseFloat(el<HTMLInputElement>("valid-percent").value),
    maskPercent: parseFloat(el<HTMLInputElement>("mask-percent").value),
    mixWindows: el<HTMLInputElement>("mix-windows").checked,
    nWindows: parseInt(el<HTMLInputElement>("n-windows").value, 10),
    seed: parseInt(el<HTMLInputElement>("seed").value, 10),
  };
  const problems = validateFinetuneForm(form);
  if (problems.length) {
    notify(problems.join("; "), true);
    return;
  }
  const { run_id } = await client.submitJob("finetune", {
    dataset_id: form.datasetId,
    preset: form.preset,
    epochs: form.epochs,
    training_percent: form.trainingPercent,
    valid_percent: form.validPercent,
    mask_percent: form.maskPercent,
    mix_windows: form.mixWindows,
    n_windows: form.nWindows,
    seed: form.seed,
  });
  notify(`fine-tune ${run_id} submitted`);
  await client.waitJob(run_id, (p) => progress(`training ${Math.round(p * 100)}%`));
  progress("");
  el<HTMLInputElement>("model-run").value = run_id;
  notify(`fine-tune ${run_id} done`);
}

async function launchEmbed(slot: "a" | "b"): Promise<void> {
  const datasetId = el<HTMLSelectElement>("dataset-select").value;
  const modelRun = el<HTMLInputElement>("model-run").value.trim();
  const params: Record<string, unknown> = {
    dataset_id: datasetId,
    window: parseInt(el<HTMLInputElement>("window").value, 10),
    stride: parseInt(el<HTMLInputElement>("stride").value, 10),
    bucket: parseInt(el<HTMLInputElement>("bucket").value, 10),
    preset: el<HTMLSelectElement>("preset").value,
    model_seed: parseInt(el<HTMLInputElement>("seed").value, 10),
  };
  if (slot === "b" && modelRun) params.model_run = modelRun; // fine-tuned side
  const { run_id } = await client.submitJob("embed", params);
  notify(`embed ${run_id} submitted (${slot === "a" ? "zero-shot" : "fine-tuned"})`);
  await client.waitJob(run_id, (p) => progress(`embedding ${Math.round(p * 100)}%`));
  progress("");
  store.update(slot === "a" ? { runA: run_id } : { runB: run_id });
  await loadRun(slot, run_id);
}

function progress(text: string): void {
  el<HTMLSpanElement>("progress").textContent = text;
}

async function loadSweep(): Promise<void> {
  const sweepRun = el<HTMLInputElement>("sweep-run").value.trim();
  if (!sweepRun) {
    notify("enter a sweep run id", true);
    return;
  }
  const report = (await client.sweepReport(sweepRun)) as {
    parallel_coordinates: { columns: string[]; rows: number[][] } | null;
  };
  if (!report.parallel_coordinates) {
    notify("sweep report has no parallel-coordinates block (too few rows)", true);
    return;
  }
  drawParallelCoordinates(el<HTMLCanvasElement>("parallel-canvas"), report.parallel_coordinates);
  notify(`sweep ${sweepRun} loaded`);
}

function restoreFromFragment(): void {
  if (!window.location.hash) return;
  const state = decodeFragment(window.location.hash);
  store.update(state);
  if (state.runA) loadRun("a", state.runA).catch((e) => notify(String(e), true));
  if (state.runB) loadRun("b", state.runB).catch((e) => notify(String(e), true));
}

function bind(): void {
  el<HTMLButtonElement>("btn-train").addEventListener("click", () =>
    launchFinetune().catch((e) => notify(String(e), true)),
  );
  el<HTMLButtonElement>("btn-embed-zero").addEventListener("click", () =>
    launchEmbed("a").catch((e) => notify(String(e), true)),
  );
  el<HTMLButtonElement>("btn-embed-tuned").addEventListener("click", () =>
    launchEmbed("b").catch((e) => notify(String(e), true)),
  );
  el<HTMLSelectElement>("color-mode").addEventListener("change", (e) => {
    store.update({ colorMode: (e.target as HTMLSelectElement).value as ViewState["colorMode"] });
    applyColorMode();
  });
  el<HTMLSelectElement>("dataset-select").addEventListener("change", (e) => {
    store.update({ datasetId: (e.target as HTMLSelectElement).value });
  });
  el<HTMLButtonElement>("btn-sweep-load").addEventListener("click", () =>
    loadSweep().catch((e) => notify(String(e), true)),
  );
  store.subscribe((state) => {
    window.history.replaceState(null, "", `#${encodeFragment(state)}`);
  });
}

async function start(): Promise<void> {
  bind();
  await refreshDatasets().catch((e) => notify(`cannot reach the workbench API: ${e}`, true));
  restoreFromFragment();
}

start();
