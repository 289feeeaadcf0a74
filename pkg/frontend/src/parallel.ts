/** Parallel-coordinates rendering of the sweep report's normalized table. */

export interface ParallelData {
  columns: string[];
  rows: number[][]; // already min-max normalized to [0, 1] by the service
}

export function drawParallelCoordinates(canvas: HTMLCanvasElement, data: ParallelData): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const m = data.columns.length;
  if (m < 2) return;
  const marginX = 60;
  const marginY = 24;
  const axisX = (j: number) => marginX + (j / (m - 1)) * (width - 2 * marginX);
  const valueY = (v: number) => height - marginY - v * (height - 2 * marginY);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  ctx.textAlign = "center";
  for (let j = 0; j < m; j++) {
    const x = axisX(j);
    ctx.beginPath();
    ctx.moveTo(x, marginY);
    ctx.lineTo(x, height - marginY);
    ctx.stroke();
    ctx.fillText(data.columns[j], x, height - 6);
  }

  for (let r = 0; r < data.rows.length; r++) {
    // best rows first in the payload: draw them hotter
    const t = data.rows.length > 1 ? r / (data.rows.length - 1) : 0;
    ctx.strokeStyle = `rgba(${Math.round(214 - t * 140)}, ${Math.round(39 + t * 80)}, ${Math.round(40 + t * 140)}, 0.8)`;
    ctx.lineWidth = r === 0 ? 2 : 1;
    ctx.beginPath();
    for (let j = 0; j < m; j++) {
      const x = axisX(j);
      const y = valueY(data.rows[r][j]);
      if (j === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.stroke();
  }
}
