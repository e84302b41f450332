/**
 * curves_by_kind: one line per coupling kind from a sweep CSV
 * (beta, kind, mean, asym_var, ci, ...), with error bars from the ci
 * column when present.
 */

import { Frame } from "../chart";
import { numericColumn, readCsv, requireRows, stringColumn } from "../csv";
import { Canvas, PALETTE } from "../raster";
import { FigureRecipe } from "../recipe";

export function renderCurves(recipe: FigureRecipe): Canvas {
  const path = recipe.inputs["input"];
  const table = readCsv(path);
  requireRows(table, path);
  const betas = numericColumn(table, "beta");
  const kinds = stringColumn(table, "kind");
  const yColumn = recipe.options["value_column"] ?? "asym_var";
  const values = numericColumn(table, yColumn);
  const cis = table.header.includes("ci") ? numericColumn(table, "ci") : values.map(() => 0);

  const order: string[] = [];
  for (const k of kinds) if (!order.includes(k)) order.push(k);

  const canvas = new Canvas(640, 440);
  const frame = new Frame(canvas, { x: 70, y: 50, w: 540, h: 330 });
  const yLo = Math.min(...values.map((v, i) => v - cis[i]));
  const yHi = Math.max(...values.map((v, i) => v + cis[i]));
  frame.setLimits(Math.min(...betas), Math.max(...betas), Math.min(0, yLo), yHi);
  frame.drawAxes(recipe.xLabel || "beta", recipe.yLabel || yColumn, recipe.title);

  const entries: Array<{ label: string; color: readonly [number, number, number] }> = [];
  order.forEach((kind, ki) => {
    const idx = kinds.map((k, i) => (k === kind ? i : -1)).filter((i) => i >= 0);
    idx.sort((a, b) => betas[a] - betas[b]);
    const xs = idx.map((i) => betas[i]);
    const ys = idx.map((i) => values[i]);
    const hw = idx.map((i) => cis[i]);
    const color = PALETTE[ki % PALETTE.length];
    frame.polyline(xs, ys, color);
    frame.markers(xs, ys, color);
    frame.errorBars(xs, ys, hw, color);
    entries.push({ label: kind, color });
  });
  frame.legend(entries);
  return canvas;
}
