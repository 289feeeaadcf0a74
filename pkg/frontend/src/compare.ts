/** Dual-view comparison (zero-shot vs fine-tuned): one brush drives both
 * scatters by matching window provenance, not raw point indices. */

import type { WindowRef } from "./types.js";

function key(ref: WindowRef): string {
  return `${ref.source}:${ref.start}:${ref.length}`;
}

/** Indices in ``other`` whose provenance matches the selected slices. */
export function matchByProvenance(
  selected: number[],
  slices: WindowRef[],
  otherSlices: WindowRef[],
): number[] {
  const wanted = new Set(selected.map((i) => key(slices[i])));
  const out: number[] = [];
  for (let i = 0; i < otherSlices.length; i++) {
    if (wanted.has(key(otherSlices[i]))) out.push(i);
  }
  return out;
}

export interface LinkedView {
  slices: WindowRef[];
  setHighlight(indices: Iterable<number>): void;
}

/** Fan a selection out to every registered view via shared provenance. */
export class SharedBrush {
  private views: LinkedView[] = [];

  register(view: LinkedView): void {
    this.views.push(view);
  }

  reset(): void {
    this.views = [];
  }

  select(sourceIndex: number, indices: number[]): number[][] {
    const source = this.views[sourceIndex];
    const all: number[][] = [];
    for (const view of this.views) {
      const matched =
        view === source ? indices : matchByProvenance(indices, source.slices, view.slices);
      view.setHighlight(matched);
      all.push(matched);
    }
    return all;
  }

  clear(): void {
    for (const view of this.views) view.setHighlight([]);
  }
}
