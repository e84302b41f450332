/**
 * Shared plot frame: margins, linear scales, ticks, axis labels, legends.
 */

import { BLACK, Canvas, Color, GREY, LIGHT_GREY } from "./raster";

export interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export function niceTicks(lo: number, hi: number, target = 5): number[] {
  if (!(hi > lo)) {
    const pad = Math.abs(lo) || 1;
    lo -= pad / 2;
    hi += pad / 2;
  }
  const span = hi - lo;
  const step0 = span / target;
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  let step = mag;
  for (const m of [1, 2, 2.5, 5, 10]) {
    if (m * mag >= step0) {
      step = m * mag;
      break;
    }
  }
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12 * span; t += step) {
    ticks.push(Math.abs(t) < 1e-12 * span ? 0 : t);
  }
  return ticks;
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1000 || a < 0.01) return v.toExponential(1).replace("e", "E");
  const s = v.toFixed(a < 0.1 ? 3 : a < 1 ? 2 : a < 10 ? 2 : 1);
  return s.replace(/\.?0+$/, "");
}

export class Frame {
  readonly canvas: Canvas;
  readonly plot: Rect;
  private xLo = 0;
  private xHi = 1;
  private yLo = 0;
  private yHi = 1;

  constructor(canvas: Canvas, plot: Rect) {
    this.canvas = canvas;
    this.plot = plot;
  }

  setLimits(xLo: number, xHi: number, yLo: number, yHi: number, padY = 0.08): void {
    const spanY = yHi - yLo || Math.abs(yHi) || 1;
    this.xLo = xLo;
    this.xHi = xHi > xLo ? xHi : xLo + 1;
    this.yLo = yLo - padY * spanY;
    this.yHi = yHi + padY * spanY;
  }

  px(x: number): number {
    return this.plot.x + ((x - this.xLo) / (this.xHi - this.xLo)) * this.plot.w;
  }

  py(y: number): number {
    return this.plot.y + this.plot.h - ((y - this.yLo) / (this.yHi - this.yLo)) * this.plot.h;
  }

  drawAxes(xLabel: string, yLabel: string, title: string): void {
    const c = this.canvas;
    const { x, y, w, h } = this.plot;
    for (const t of niceTicks(this.yLo, this.yHi)) {
      const yy = Math.round(this.py(t));
      if (yy < y || yy > y + h) continue;
      c.line(x, yy, x + w, yy, LIGHT_GREY);
      const label = formatTick(t);
      c.text(x - c.textWidth(label) - 6, yy - 3, label, GREY);
    }
    for (const t of niceTicks(this.xLo, this.xHi)) {
      const xx = Math.round(this.px(t));
      if (xx < x || xx > x + w) continue;
      c.line(xx, y + h, xx, y + h + 4, BLACK);
      const label = formatTick(t);
      c.text(xx - c.textWidth(label) / 2, y + h + 8, label, GREY);
    }
    c.line(x, y, x, y + h, BLACK);
    c.line(x, y + h, x + w, y + h, BLACK);
    if (title) c.text(x + (w - c.textWidth(title, 2)) / 2, y - 24, title, BLACK, 2);
    if (xLabel) c.text(x + (w - c.textWidth(xLabel)) / 2, y + h + 22, xLabel, BLACK);
    if (yLabel) c.text(x, y - 12, yLabel, BLACK);
  }

  polyline(xs: number[], ys: number[], color: Color, thickness = 2): void {
    for (let i = 1; i < xs.length; i++) {
      this.canvas.line(this.px(xs[i - 1]), this.py(ys[i - 1]), this.px(xs[i]), this.py(ys[i]), color, thickness);
    }
  }

  markers(xs: number[], ys: number[], color: Color, size = 2): void {
    for (let i = 0; i < xs.length; i++) {
      this.canvas.fillRect(this.px(xs[i]) - size, this.py(ys[i]) - size, 2 * size + 1, 2 * size + 1, color);
    }
  }

  errorBars(xs: number[], ys: number[], halfwidths: number[], color: Color): void {
    for (let i = 0; i < xs.length; i++) {
      if (!Number.isFinite(halfwidths[i]) || halfwidths[i] <= 0) continue;
      const px = this.px(xs[i]);
      const lo = this.py(ys[i] - halfwidths[i]);
      const hi = this.py(ys[i] + halfwidths[i]);
      this.canvas.line(px, lo, px, hi, color);
      this.canvas.line(px - 3, lo, px + 3, lo, color);
      this.canvas.line(px - 3, hi, px + 3, hi, color);
    }
  }

  legend(entries: Array<{ label: string; color: Color }>): void {
    const c = this.canvas;
    const pad = 6;
    const widest = Math.max(...entries.map((e) => c.textWidth(e.label)));
    const boxW = widest + 26 + 2 * pad;
    const boxH = entries.length * 12 + 2 * pad;
    const x0 = this.plot.x + this.plot.w - boxW - 8;
    const y0 = this.plot.y + 8;
    c.fillRect(x0, y0, boxW, boxH, [252, 252, 252]);
    c.line(x0, y0, x0 + boxW, y0, GREY);
    c.line(x0, y0 + boxH, x0 + boxW, y0 + boxH, GREY);
    c.line(x0, y0, x0, y0 + boxH, GREY);
    c.line(x0 + boxW, y0, x0 + boxW, y0 + boxH, GREY);
    entries.forEach((e, i) => {
      const yy = y0 + pad + i * 12;
      c.fillRect(x0 + pad, yy + 2, 18, 4, e.color);
      c.text(x0 + pad + 24, yy, e.label, BLACK);
    });
  }
}
