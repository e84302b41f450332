/**
 * bar_compare: one bar per row of a comparison CSV (e.g. sorted vs fixed
 * vs independent pairing), with error whiskers from the ci column.
 */

import { Frame, formatTick } from "../chart";
import { numericColumn, readCsv, requireRows, stringColumn } from "../csv";
import { BLACK, Canvas, PALETTE } from "../raster";
import { FigureRecipe } from "../recipe";

export function renderBars(recipe: FigureRecipe): Canvas {
  const path = recipe.inputs["input"];
  const table = readCsv(path);
  requireRows(table, path);
  const labelColumn = recipe.options["label_column"] ?? (table.header.includes("scheme") ? "scheme" : "kind");
  const labels = stringColumn(table, labelColumn);
  const yColumn = recipe.options["value_column"] ?? "asym_var";
  const values = numericColumn(table, yColumn);
  const cis = table.header.includes("ci") ? numericColumn(table, "ci") : values.map(() => 0);

  const canvas = new Canvas(560, 420);
  const frame = new Frame(canvas, { x: 80, y: 50, w: 430, h: 300 });
  const hi = Math.max(...values.map((v, i) => v + cis[i]));
  frame.setLimits(0, labels.length, 0, hi);
  frame.drawAxes("", recipe.yLabel || yColumn, recipe.title);

  const slot = 430 / labels.length;
  labels.forEach((label, i) => {
    const color = PALETTE[i % PALETTE.length];
    const cx = frame.px(i + 0.5);
    const barW = Math.max(10, slot * 0.5);
    const y0 = frame.py(values[i]);
    const base = frame.py(0);
    canvas.fillRect(cx - barW / 2, y0, barW, base - y0, color);
    frame.errorBars([i + 0.5], [values[i]], [cis[i]], BLACK);
    canvas.text(cx - canvas.textWidth(label) / 2, base + 10, label, BLACK);
    const tag = formatTick(values[i]);
    canvas.text(cx - canvas.textWidth(tag) / 2, y0 - 12, tag, BLACK);
  });
  if (recipe.xLabel) canvas.text(80 + (430 - canvas.textWidth(recipe.xLabel)) / 2, 390, recipe.xLabel, BLACK);
  return canvas;
}
