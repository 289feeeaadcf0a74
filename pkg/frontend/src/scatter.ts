/** Canvas scatter of projected embeddings with rectangular brushing.
 *
 * Plain 2D canvas is comfortably fast at the ~5k points a desk-scale run
 * produces; points are colored by time order (default), k-means cluster, or
 * ground-truth overlay labels supplied by the caller.
 */

import type { Region } from "./types.js";

export interface ScatterTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/** Fit data bounds into a pixel box with a margin, preserving aspect. */
export function fitTransform(
  coords: Float64Array,
  width: number,
  height: number,
  margin = 20,
): ScatterTransform {
  let x0 = Infinity;
  let x1 = -Infinity;
  let y0 = Infinity;
  let y1 = -Infinity;
  for (let i = 0; i * 2 < coords.length; i++) {
    x0 = Math.min(x0, coords[i * 2]);
    x1 = Math.max(x1, coords[i * 2]);
    y0 = Math.min(y0, coords[i * 2 + 1]);
    y1 = Math.max(y1, coords[i * 2 + 1]);
  }
  const spanX = x1 - x0 || 1;
  const spanY = y1 - y0 || 1;
  const scale = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY);
  return {
    scale,
    offsetX: margin - x0 * scale + (width - 2 * margin - spanX * scale) / 2,
    offsetY: margin - y0 * scale + (height - 2 * margin - spanY * scale) / 2,
  };
}

export function toPixel(t: ScatterTransform, x: number, y: number): [number, number] {
  return [x * t.scale + t.offsetX, y * t.scale + t.offsetY];
}

export function toData(t: ScatterTransform, px: number, py: number): [number, number] {
  return [(px - t.offsetX) / t.scale, (py - t.offsetY) / t.scale];
}

const PALETTE = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
  "#76b7b2", "#edc948", "#ff9da7", "#9c755f", "#bab0ac",
];

export function colorForOrder(index: number, total: number): string {
  // viridis-like ramp by index so temporal progression reads as a gradient
  const t = total > 1 ? index / (total - 1) : 0;
  const r = Math.round(68 + t * (253 - 68));
  const g = Math.round(1 + t * (231 - 1));
  const b = Math.round(84 + t * (37 - 84));
  return `rgb(${r},${g},${b})`;
}

export function colorForLabel(label: number): string {
  return PALETTE[label % PALETTE.length];
}

export interface ScatterCallbacks {
  onBrush(region: Region | null): void;
}

export class ScatterView {
  private transform: ScatterTransform;
  private labels: number[] | null = null;
  private highlighted = new Set<number>();
  private dragStart: [number, number] | null = null;
  private dragCurrent: [number, number] | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private coords: Float64Array,
    private callbacks: ScatterCallbacks,
  ) {
    this.transform = fitTransform(coords, canvas.width, canvas.height);
    canvas.addEventListener("mousedown", (e) => this.down(e));
    canvas.addEventListener("mousemove", (e) => this.move(e));
    window.addEventListener("mouseup", (e) => this.up(e));
    this.draw();
  }

  setLabels(labels: number[] | null): void {
    this.labels = labels;
    this.draw();
  }

  setHighlight(indices: Iterable<number>): void {
    this.highlighted = new Set(indices);
    this.draw();
  }

  private pointer(e: MouseEvent): [number, number] {
    const rect = this.canvas.getBoundingClientRect();
    return [e.clientX - rect.left, e.clientY - rect.top];
  }

  private down(e: MouseEvent): void {
    this.dragStart = this.pointer(e);
    this.dragCurrent = this.dragStart;
  }

  private move(e: MouseEvent): void {
    if (!this.dragStart) return;
    this.dragCurrent = this.pointer(e);
    this.draw();
  }

  private up(e: MouseEvent): void {
    if (!this.dragStart || !this.dragCurrent) return;
    const [sx, sy] = this.dragStart;
    const [cx, cy] = this.pointer(e);
    this.dragStart = null;
    this.dragCurrent = null;
    if (Math.abs(cx - sx) < 3 && Math.abs(cy - sy) < 3) {
      this.callbacks.onBrush(null); // click clears
      this.draw();
      return;
    }
    const [x0, y0] = toData(this.transform, sx, sy);
    const [x1, y1] = toData(this.transform, cx, cy);
    this.callbacks.onBrush({ x0, x1, y0, y1 });
    this.draw();
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    const n = this.coords.length / 2;
    const dim = this.highlighted.size > 0;
    for (let i = 0; i < n; i++) {
      const [px, py] = toPixel(this.transform, this.coords[i * 2], this.coords[i * 2 + 1]);
      const hot = this.highlighted.has(i);
      ctx.globalAlpha = dim && !hot ? 0.15 : 0.85;
      ctx.fillStyle = this.labels ? colorForLabel(this.labels[i]) : colorForOrder(i, n);
      if (hot) ctx.fillStyle = "#d62728";
      ctx.beginPath();
      ctx.arc(px, py, hot ? 3.5 : 2.2, 0, Math.PI * 2);
      ctx.fill();
    }
    ctx.globalAlpha = 1;
    if (this.dragStart && this.dragCurrent) {
      const [sx, sy] = this.dragStart;
      const [cx, cy] = this.dragCurrent;
      ctx.strokeStyle = "#333";
      ctx.setLineDash([4, 3]);
      ctx.strokeRect(Math.min(sx, cx), Math.min(sy, cy), Math.abs(cx - sx), Math.abs(cy - sy));
      ctx.setLineDash([]);
    }
  }
}
