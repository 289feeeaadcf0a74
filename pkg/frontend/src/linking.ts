/** Pure brush-linking logic between the scatter and the series strip.
 *
 * Embedding provenance is regular: row k covers [k * stride, k * stride +
 * window) of the (bucketed) series, so the client derives it from the embed
 * run's manifest parameters instead of shipping one slice per point.
 */

import type { Region, TimeRange, WindowRef } from "./types.js";

export function slicesFromSpec(
  n: number,
  window: number,
  stride: number,
  source: string,
): WindowRef[] {
  const out: WindowRef[] = new Array(n);
  for (let k = 0; k < n; k++) out[k] = { start: k * stride, length: window, source };
  return out;
}

/** Indices of points inside a rectangular brush (inclusive bounds). */
export function pointsInRegion(coords: Float64Array, region: Region): number[] {
  const x0 = Math.min(region.x0, region.x1);
  const x1 = Math.max(region.x0, region.x1);
  const y0 = Math.min(region.y0, region.y1);
  const y1 = Math.max(region.y0, region.y1);
  const out: number[] = [];
  for (let i = 0; i * 2 < coords.length; i++) {
    const x = coords[i * 2];
    const y = coords[i * 2 + 1];
    if (x >= x0 && x <= x1 && y >= y0 && y <= y1) out.push(i);
  }
  return out;
}

/** Union of the selected windows' extents, merged into disjoint ranges. */
export function windowExtents(slices: WindowRef[], indices: number[]): TimeRange[] {
  const spans = indices
    .map((i) => ({ start: slices[i].start, stop: slices[i].start + slices[i].length }))
    .sort((a, b) => a.start - b.start);
  const merged: TimeRange[] = [];
  for (const span of spans) {
    const last = merged[merged.length - 1];
    if (last && span.start <= last.stop) {
      last.stop = Math.max(last.stop, span.stop);
    } else {
      merged.push({ ...span });
    }
  }
  return merged;
}

/** Points whose window overlaps a half-open time range. */
export function pointsOverlappingRange(slices: WindowRef[], range: TimeRange): number[] {
  const out: number[] = [];
  for (let i = 0; i < slices.length; i++) {
    const start = slices[i].start;
    const stop = start + slices[i].length;
    if (start < range.stop && range.start < stop) out.push(i);
  }
  return out;
}

export function rangeContains(ranges: TimeRange[], index: number): boolean {
  return ranges.some((r) => index >= r.start && index < r.stop);
}

/** Bounding box of a point subset, for zoom-to-selection. */
export function boundingRegion(coords: Float64Array, indices: number[]): Region | null {
  if (indices.length === 0) return null;
  let x0 = Infinity;
  let x1 = -Infinity;
  let y0 = Infinity;
  let y1 = -Infinity;
  for (const i of indices) {
    x0 = Math.min(x0, coords[i * 2]);
    x1 = Math.max(x1, coords[i * 2]);
    y0 = Math.min(y0, coords[i * 2 + 1]);
    y1 = Math.max(y1, coords[i * 2 + 1]);
  }
  return { x0, x1, y0, y1 };
}
