import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import path from "node:path";

import { decodeMatrix, EMBEDDINGS_MAGIC, PROJECTION_MAGIC } from "../src/binary.js";
import { slicesFromSpec } from "../src/linking.js";
import type { Annotations, RunManifest, WindowRef } from "../src/types.js";

const FIXTURES = path.join(path.dirname(fileURLToPath(import.meta.url)), "..", "fixtures");

export function fixtureBytes(name: string): ArrayBuffer {
  const buf = readFileSync(path.join(FIXTURES, name));
  return buf.buffer.slice(buf.byteOffset, buf.byteOffset + buf.byteLength) as ArrayBuffer;
}

export function fixtureJson<T>(name: string): T {
  return JSON.parse(readFileSync(path.join(FIXTURES, name), "utf8")) as T;
}

export interface LoadedFixtureRun {
  manifest: RunManifest;
  coords: Float64Array;
  n: number;
  slices: WindowRef[];
}

/** Projection coords plus provenance derived from the embed manifest, the
 * same way the app does it. */
export function loadRunFixture(name: "zero" | "tuned"): LoadedFixtureRun {
  const manifest = fixtureJson<RunManifest>(`${name}_manifest.json`);
  const projection = decodeMatrix(fixtureBytes(`${name}_projection.bin`), PROJECTION_MAGIC);
  const params = manifest.params as { window: number; stride: number; dataset_id: string };
  const slices = slicesFromSpec(projection.n, params.window, params.stride, params.dataset_id);
  return { manifest, coords: projection.data, n: projection.n, slices };
}

export function loadAnnotations(): Annotations {
  return fixtureJson<{ annotations: Annotations }>("s2_dataset.json").annotations;
}

export function loadEmbeddings(name: "zero" | "tuned") {
  return decodeMatrix(fixtureBytes(`${name}_embeddings.bin`), EMBEDDINGS_MAGIC);
}
