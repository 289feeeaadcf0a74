/** Small deterministic k-means over 2D projection coords.
 *
 * Cluster coloring is a client-side visual aid only (the projection itself
 * always comes from the service); seeded so a shared URL recolors the same
 * way everywhere.
 */

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function kmeans2d(coords: Float64Array, k: number, seed = 1, iterations = 32): number[] {
  const n = coords.length / 2;
  if (k < 1 || n === 0) return new Array(n).fill(0);
  k = Math.min(k, n);
  const rand = mulberry32(seed);
  const centroids: number[][] = [];
  const taken = new Set<number>();
  while (centroids.length < k) {
    const pick = Math.floor(rand() * n);
    if (!taken.has(pick)) {
      taken.add(pick);
      centroids.push([coords[pick * 2], coords[pick * 2 + 1]]);
    }
  }
  const labels = new Array<number>(n).fill(0);
  for (let step = 0; step < iterations; step++) {
    let moved = false;
    for (let i = 0; i < n; i++) {
      let best = 0;
      let bestDist = Infinity;
      for (let c = 0; c < k; c++) {
        const dx = coords[i * 2] - centroids[c][0];
        const dy = coords[i * 2 + 1] - centroids[c][1];
        const dist = dx * dx + dy * dy;
        if (dist < bestDist) {
          bestDist = dist;
          best = c;
        }
      }
      if (labels[i] !== best) {
        labels[i] = best;
        moved = true;
      }
    }
    const sums = Array.from({ length: k }, () => [0, 0, 0]);
    for (let i = 0; i < n; i++) {
      sums[labels[i]][0] += coords[i * 2];
      sums[labels[i]][1] += coords[i * 2 + 1];
      sums[labels[i]][2] += 1;
    }
    for (let c = 0; c < k; c++) {
      if (sums[c][2] > 0) {
        centroids[c][0] = sums[c][0] / sums[c][2];
        centroids[c][1] = sums[c][1] / sums[c][2];
      }
    }
    if (!moved) break;
  }
  return labels;
}
