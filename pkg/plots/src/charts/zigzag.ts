/**
 * zigzag_panel: three mini-panels against coupling strength from a zigzag
 * stats CSV — pair-average variance (with error bars), fraction of time in
 * opposite directions, and mean separation.
 */

import { Frame } from "../chart";
import { numericColumn, readCsv, requireRows } from "../csv";
import { Canvas, PALETTE, BLACK } from "../raster";
import { FigureRecipe } from "../recipe";

export function renderZigzagPanel(recipe: FigureRecipe): Canvas {
  const path = recipe.inputs["input"];
  const table = readCsv(path);
  requireRows(table, path);
  const betas = numericColumn(table, "beta");
  const panels: Array<{ column: string; label: string; ci?: number[] }> = [
    { column: "asym_var", label: "2 sigma^2 of pair average", ci: numericColumn(table, "ci") },
    { column: "opposite_fraction", label: "opposite-direction time" },
    { column: "mean_distance", label: "mean |x - y|" },
  ];

  const canvas = new Canvas(980, 360);
  if (recipe.title) {
    canvas.text((980 - canvas.textWidth(recipe.title, 2)) / 2, 8, recipe.title, BLACK, 2);
  }
  panels.forEach((panel, pi) => {
    const values = numericColumn(table, panel.column);
    const frame = new Frame(canvas, { x: 60 + pi * 320, y: 60, w: 250, h: 230 });
    const hw = panel.ci ?? values.map(() => 0);
    const lo = Math.min(0, ...values.map((v, i) => v - hw[i]));
    const hi = Math.max(...values.map((v, i) => v + hw[i]));
    frame.setLimits(Math.min(...betas), Math.max(...betas), lo, hi);
    frame.drawAxes(recipe.xLabel || "beta", "", panel.label.split(" ")[0]);
    const order = betas.map((_, i) => i).sort((a, b) => betas[a] - betas[b]);
    const xs = order.map((i) => betas[i]);
    const ys = order.map((i) => values[i]);
    const color = PALETTE[pi % PALETTE.length];
    frame.polyline(xs, ys, color);
    frame.markers(xs, ys, color);
    if (panel.ci) frame.errorBars(xs, ys, order.map((i) => hw[i]), color);
    canvas.text(60 + pi * 320, 310, panel.label, BLACK);
  });
  return canvas;
}
