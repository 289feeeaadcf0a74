import { describe, expect, it } from "vitest";

import {
  boundingRegion,
  pointsInRegion,
  pointsOverlappingRange,
  rangeContains,
  slicesFromSpec,
  windowExtents,
} from "../src/linking.js";
import { fixtureJson, loadAnnotations, loadRunFixture } from "./helpers.js";

describe("brush geometry", () => {
  const slices = slicesFromSpec(10, 16, 4, "ds");

  it("derives regular provenance from the embed spec", () => {
    expect(slices[0]).toEqual({ start: 0, length: 16, source: "ds" });
    expect(slices[9]).toEqual({ start: 36, length: 16, source: "ds" });
  });

  it("merges overlapping window extents", () => {
    expect(windowExtents(slices, [0, 1])).toEqual([{ start: 0, stop: 20 }]);
    expect(windowExtents(slices, [0, 9])).toEqual([
      { start: 0, stop: 16 },
      { start: 36, stop: 52 },
    ]);
    expect(windowExtents(slices, [])).toEqual([]);
  });

  it("finds points overlapping a time range", () => {
    expect(pointsOverlappingRange(slices, { start: 0, stop: 1 })).toEqual([0]);
    expect(pointsOverlappingRange(slices, { start: 17, stop: 18 })).toEqual([1, 2, 3, 4]);
    expect(pointsOverlappingRange(slices, { start: 0, stop: 0 })).toEqual([]);
  });

  it("selects points inside a rectangle regardless of corner order", () => {
    const coords = new Float64Array([0, 0, 1, 1, 2, 2, 5, 5]);
    expect(pointsInRegion(coords, { x0: 2.5, x1: -0.5, y0: 2.5, y1: -0.5 })).toEqual([0, 1, 2]);
    expect(pointsInRegion(coords, { x0: 10, x1: 11, y0: 10, y1: 11 })).toEqual([]);
  });
});

describe("linked-brush round trip on the annotated fixture", () => {
  const run = loadRunFixture("zero");
  const annotations = loadAnnotations();

  it("fixture sanity: S2 carries two point anomalies", () => {
    expect(annotations.anomalies.length).toBe(2);
  });

  it("scatter-brushing the anomaly point cloud highlights both anomaly indices", () => {
    // the points whose windows contain each anomaly
    const anomalyPoints = annotations.anomalies.flatMap(([pos, length]) =>
      pointsOverlappingRange(run.slices, { start: pos, stop: pos + length }),
    );
    expect(anomalyPoints.length).toBeGreaterThan(0);
    const region = boundingRegion(run.coords, anomalyPoints)!;
    const brushed = pointsInRegion(run.coords, region);
    for (const p of anomalyPoints) expect(brushed).toContain(p);
    const extents = windowExtents(run.slices, brushed);
    for (const [pos] of annotations.anomalies) {
      expect(rangeContains(extents, pos)).toBe(true);
    }
  });

  it("series-brushing an anomaly neighborhood highlights a covering point", () => {
    for (const [pos] of annotations.anomalies) {
      const points = pointsOverlappingRange(run.slices, { start: pos - 2, stop: pos + 3 });
      expect(points.length).toBeGreaterThanOrEqual(1);
      const covering = points.filter(
        (i) => run.slices[i].start <= pos && pos < run.slices[i].start + run.slices[i].length,
      );
      expect(covering.length).toBeGreaterThanOrEqual(1);
    }
  });

  it("round trip: scatter-brush -> ranges -> series-brush is a superset", () => {
    const region = boundingRegion(run.coords, [5, 6, 7, 40, 41])!;
    const original = pointsInRegion(run.coords, region);
    const ranges = windowExtents(run.slices, original);
    const roundTripped = new Set(
      ranges.flatMap((range) => pointsOverlappingRange(run.slices, range)),
    );
    for (const p of original) expect(roundTripped.has(p)).toBe(true);
  });

  it("brushing everything highlights the full windowed span", () => {
    const all = Array.from({ length: run.n }, (_, i) => i);
    const extents = windowExtents(run.slices, all);
    expect(extents).toEqual([{ start: 0, stop: run.slices[run.n - 1].start + 16 }]);
    expect(pointsOverlappingRange(run.slices, { start: 0, stop: 0 })).toEqual([]);
  });
});

describe("server selection payload agrees with client provenance", () => {
  const run = loadRunFixture("zero");

  interface SelectionRow {
    index: number;
    start: number;
    length: number;
    values: number[][];
  }

  it("selection rows carry the provenance the client derives", () => {
    const rows = fixtureJson<SelectionRow[]>("selection_sample.json");
    for (const row of rows) {
      expect(row.start).toBe(run.slices[row.index].start);
      expect(row.length).toBe(run.slices[row.index].length);
    }
  });

  it("selection values equal re-slicing the stored series", () => {
    const rows = fixtureJson<SelectionRow[]>("selection_sample.json");
    const series = fixtureJson<{ values: number[][] }>("s2_values.json").values;
    for (const row of rows) {
      expect(row.values).toEqual(series.slice(row.start, row.start + row.length));
    }
  });
});
