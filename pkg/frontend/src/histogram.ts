// Histogram panel: 256-bin drawing plus the draggable threshold marker.
// Geometry helpers are pure so they can be unit tested without a canvas.

export interface MarkerGeometry {
  width: number; // canvas pixel width
}

/** Canvas x of a gray level, centering each bin in its column. */
export function levelToX(level: number, geom: MarkerGeometry): number {
  return ((level + 0.5) / 256) * geom.width;
}

/** Gray level under a canvas x position, clamped to [0, 255]. */
export function xToLevel(x: number, geom: MarkerGeometry): number {
  const level = Math.floor((x / geom.width) * 256);
  return Math.max(0, Math.min(255, level));
}

/** Bin heights normalized against the largest count (empty-safe). */
export function normalizedHeights(bins: number[]): number[] {
  const peak = Math.max(1, ...bins);
  return bins.map((b) => b / peak);
}

export function drawHistogram(
  canvas: HTMLCanvasElement,
  bins: number[],
  markerLevel: number | null,
): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = '#f4f1ea';
  ctx.fillRect(0, 0, width, height);
  const heights = normalizedHeights(bins);
  ctx.fillStyle = '#5b7a9d';
  const barWidth = width / 256;
  for (let i = 0; i < 256; i++) {
    const h = heights[i] * (height - 4);
    ctx.fillRect(i * barWidth, height - h, Math.max(1, barWidth - 0.5), h);
  }
  if (markerLevel !== null) {
    const x = levelToX(markerLevel, { width });
    ctx.strokeStyle = '#b03030';
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(x, 0);
    ctx.lineTo(x, height);
    ctx.stroke();
  }
}
