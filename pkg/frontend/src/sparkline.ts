// Rolling per-term energy history and its canvas sparkline. The history
// is kept separate from drawing so the recording logic is testable
// without a DOM.

import { EnergyBreakdown } from "./protocol.js";

export interface EnergySample {
  stretch: number;
  bend: number;
  total: number;
}

export class EnergyHistory {
  private samples: EnergySample[] = [];

  constructor(readonly capacity = 240) {}

  push(energy: EnergyBreakdown): void {
    this.samples.push({
      stretch: energy.stretch,
      bend: energy.bend,
      total: energy.total,
    });
    if (this.samples.length > this.capacity) this.samples.shift();
  }

  clear(): void {
    this.samples = [];
  }

  get length(): number {
    return this.samples.length;
  }

  values(term: keyof EnergySample): number[] {
    return this.samples.map((s) => s[term]);
  }

  latest(): EnergySample | null {
    return this.samples.length > 0
      ? this.samples[this.samples.length - 1]
      : null;
  }

  // Scaled polyline for one term: x spread over [0, width], y flipped so
  // larger energies sit higher, normalized against the window maximum.
  path(
    term: keyof EnergySample,
    width: number,
    height: number,
  ): Array<[number, number]> {
    const values = this.values(term);
    if (values.length === 0) return [];
    const max = Math.max(...this.samples.map((s) => s.total), 1e-30);
    const dx = values.length > 1 ? width / (values.length - 1) : 0;
    return values.map((v, i) => [i * dx, height * (1 - 0.92 * (v / max))]);
  }
}

const TERM_STYLES: Array<[keyof EnergySample, string]> = [
  ["total", "#e8e6e3"],
  ["stretch", "#4fa3ff"],
  ["bend", "#ff9e4f"],
];

export function drawSparkline(
  canvas: HTMLCanvasElement,
  history: EnergyHistory,
): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.lineWidth = 1.5;
  for (const [term, color] of TERM_STYLES) {
    const points = history.path(term, width, height);
    if (points.length < 2) continue;
    ctx.strokeStyle = color;
    ctx.beginPath();
    ctx.moveTo(points[0][0], points[0][1]);
    for (const [x, y] of points.slice(1)) ctx.lineTo(x, y);
    ctx.stroke();
  }
}
