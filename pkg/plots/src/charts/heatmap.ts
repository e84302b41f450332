/**
 * heatmap_pair: side-by-side density heatmaps, e.g. a transport plan next
 * to the empirical coupled invariant measure on the same axes.
 */

import { formatTick } from "../chart";
import { readMatrixCsv } from "../csv";
import { BLACK, Canvas, GREY, heatColor } from "../raster";
import { FigureRecipe, RecipeError } from "../recipe";

function drawPanel(
  canvas: Canvas,
  rect: { x: number; y: number; w: number; h: number },
  file: string,
  label: string,
  gamma: number
): void {
  const { x: nodesX, y: nodesY, values } = readMatrixCsv(file);
  const n = nodesX.length;
  const m = nodesY.length;
  let peak = 0;
  for (const row of values) for (const v of row) peak = Math.max(peak, v);
  if (peak <= 0) {
    throw new RecipeError(`no positive mass in ${file}`);
  }
  for (let j = 0; j < m; j++) {
    for (let i = 0; i < n; i++) {
      // x rightwards, y upwards
      const t = Math.pow(values[i][j] / peak, gamma);
      const px = rect.x + Math.floor((i / n) * rect.w);
      const py = rect.y + rect.h - Math.floor(((j + 1) / m) * rect.h);
      const pw = Math.ceil(rect.w / n);
      const ph = Math.ceil(rect.h / m);
      canvas.fillRect(px, py, pw, ph, heatColor(t));
    }
  }
  canvas.line(rect.x, rect.y, rect.x, rect.y + rect.h, BLACK);
  canvas.line(rect.x, rect.y + rect.h, rect.x + rect.w, rect.y + rect.h, BLACK);
  canvas.text(rect.x + (rect.w - canvas.textWidth(label)) / 2, rect.y - 14, label, BLACK);
  const xt = [nodesX[0], nodesX[Math.floor((n - 1) / 2)], nodesX[n - 1]];
  xt.forEach((v, k) => {
    const px = rect.x + Math.round((k / 2) * rect.w);
    canvas.text(px - canvas.textWidth(formatTick(v)) / 2, rect.y + rect.h + 6, formatTick(v), GREY);
  });
  const yt = [nodesY[0], nodesY[m - 1]];
  canvas.text(rect.x - canvas.textWidth(formatTick(yt[0])) - 4, rect.y + rect.h - 8, formatTick(yt[0]), GREY);
  canvas.text(rect.x - canvas.textWidth(formatTick(yt[1])) - 4, rect.y, formatTick(yt[1]), GREY);
}

export function renderHeatmapPair(recipe: FigureRecipe): Canvas {
  const left = recipe.inputs["plan"] ?? recipe.inputs["input"];
  const right = recipe.inputs["empirical"];
  if (!left) throw new RecipeError("heatmap_pair needs input.plan (or input)");
  const gamma = Number(recipe.options["gamma"] ?? "0.4");

  const canvas = new Canvas(760, 430);
  if (recipe.title) {
    canvas.text((760 - canvas.textWidth(recipe.title, 2)) / 2, 12, recipe.title, BLACK, 2);
  }
  const panelW = right ? 320 : 640;
  drawPanel(canvas, { x: 60, y: 60, w: panelW, h: 320 }, left,
            recipe.options["left_label"] ?? "transport plan", gamma);
  if (right) {
    drawPanel(canvas, { x: 420, y: 60, w: 320, h: 320 }, right,
              recipe.options["right_label"] ?? "empirical", gamma);
  }
  if (recipe.xLabel) canvas.text(380 - canvas.textWidth(recipe.xLabel) / 2, 410, recipe.xLabel, BLACK);
  if (recipe.yLabel) canvas.text(8, 60, recipe.yLabel, BLACK);
  return canvas;
}
