import { describe, expect, it } from "vitest";

import {
  decodeFragment,
  decodeIndexList,
  encodeFragment,
  encodeIndexList,
  ViewStateStore,
} from "../src/state.js";
import { defaultViewState } from "../src/types.js";

describe("index list codec", () => {
  it("compresses runs and round-trips", () => {
    expect(encodeIndexList([3, 5, 6, 7, 8, 9, 12])).toBe("3,5-9,12");
    expect(decodeIndexList("3,5-9,12")).toEqual([3, 5, 6, 7, 8, 9, 12]);
    expect(decodeIndexList("")).toEqual([]);
    expect(decodeIndexList(encodeIndexList([0]))).toEqual([0]);
  });

  it("deduplicates and sorts before encoding", () => {
    expect(decodeIndexList(encodeIndexList([9, 2, 2, 3]))).toEqual([2, 3, 9]);
  });
});

describe("URL fragment state", () => {
  it("restores exactly what was encoded", () => {
    const state = defaultViewState();
    state.datasetId = "ds-abc123";
    state.runA = "embed-aaa";
    state.runB = "embed-bbb";
    state.selectedPoints = [1, 2, 3, 10];
    state.selectedRange = { start: 40, stop: 90 };
    state.projection = { method: "tsne", perplexity: 12.5, iterations: 400, pca_dims: 20, seed: 9 };
    state.colorMode = "cluster";
    state.clusterK = 7;
    const restored = decodeFragment(encodeFragment(state));
    expect(restored).toEqual(state);
  });

  it("tolerates an empty fragment", () => {
    expect(decodeFragment("")).toEqual(defaultViewState());
    expect(decodeFragment("#")).toEqual(defaultViewState());
  });
});

describe("view state store", () => {
  it("notifies subscribers and supports unsubscribe", () => {
    const store = new ViewStateStore();
    const seen: (string | null)[] = [];
    const off = store.subscribe((s) => seen.push(s.datasetId));
    store.update({ datasetId: "x" });
    off();
    store.update({ datasetId: "y" });
    expect(seen).toEqual(["x"]);
    expect(store.get().datasetId).toBe("y");
  });
});
