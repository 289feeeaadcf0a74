/** Series strip: raw (bucketed) samples with ground-truth overlays,
 * highlight ranges from scatter brushes, and horizontal range brushing. */

import type { Annotations, TimeRange } from "./types.js";

export interface StripCallbacks {
  onBrush(range: TimeRange | null): void;
}

export class StripView {
  private highlights: TimeRange[] = [];
  private dragStart: number | null = null;
  private dragCurrent: number | null = null;

  constructor(
    private canvas: HTMLCanvasElement,
    private values: number[][],
    private annotations: Annotations | null,
    private callbacks: StripCallbacks,
    private channel = 0,
  ) {
    canvas.addEventListener("mousedown", (e) => {
      this.dragStart = this.timeAt(e);
      this.dragCurrent = this.dragStart;
    });
    canvas.addEventListener("mousemove", (e) => {
      if (this.dragStart === null) return;
      this.dragCurrent = this.timeAt(e);
      this.draw();
    });
    window.addEventListener("mouseup", (e) => {
      if (this.dragStart === null || this.dragCurrent === null) return;
      const a = this.dragStart;
      const b = this.timeAt(e);
      this.dragStart = null;
      this.dragCurrent = null;
      if (Math.abs(b - a) < 1) {
        this.callbacks.onBrush(null);
      } else {
        this.callbacks.onBrush({ start: Math.min(a, b), stop: Math.max(a, b) + 1 });
      }
      this.draw();
    });
    this.draw();
  }

  setHighlights(ranges: TimeRange[]): void {
    this.highlights = ranges;
    this.draw();
  }

  setChannel(channel: number): void {
    this.channel = channel;
    this.draw();
  }

  private timeAt(e: MouseEvent): number {
    const rect = this.canvas.getBoundingClientRect();
    const frac = (e.clientX - rect.left) / rect.width;
    return Math.max(0, Math.min(this.values.length - 1, Math.round(frac * this.values.length)));
  }

  private xFor(t: number): number {
    return (t / this.values.length) * this.canvas.width;
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    const n = this.values.length;
    if (n === 0) return;

    // ground-truth overlays render straight from the sidecar annotations
    if (this.annotations) {
      ctx.globalAlpha = 0.15;
      for (const [segStart, segEnd] of this.annotations.segments) {
        ctx.fillStyle = "#4e79a7";
        ctx.fillRect(this.xFor(segStart), 0, 1.5, height);
        ctx.fillRect(this.xFor(segEnd) - 1.5, 0, 1.5, height);
      }
      ctx.fillStyle = "#e15759";
      for (const [start, length] of this.annotations.anomalies) {
        ctx.fillRect(this.xFor(start) - 2, 0, Math.max(4, this.xFor(start + length) - this.xFor(start)), height);
      }
      ctx.globalAlpha = 1;
    }

    ctx.globalAlpha = 0.25;
    ctx.fillStyle = "#f2c14e";
    for (const range of this.highlights) {
      ctx.fillRect(this.xFor(range.start), 0, Math.max(2, this.xFor(range.stop) - this.xFor(range.start)), height);
    }
    ctx.globalAlpha = 1;

    const channelValues = this.values.map((row) => row[this.channel] ?? row[0]);
    let lo = Infinity;
    let hi = -Infinity;
    for (const v of channelValues) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
    const span = hi - lo || 1;
    ctx.strokeStyle = "#222";
    ctx.lineWidth = 1;
    ctx.beginPath();
    for (let t = 0; t < n; t++) {
      const x = this.xFor(t);
      const y = height - 4 - ((channelValues[t] - lo) / span) * (height - 8);
      if (t === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.stroke();

    if (this.dragStart !== null && this.dragCurrent !== null) {
      ctx.globalAlpha = 0.2;
      ctx.fillStyle = "#666";
      const a = this.xFor(Math.min(this.dragStart, this.dragCurrent));
      const b = this.xFor(Math.max(this.dragStart, this.dragCurrent));
      ctx.fillRect(a, 0, b - a, height);
      ctx.globalAlpha = 1;
    }
  }
}
