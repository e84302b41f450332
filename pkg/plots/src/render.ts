/**
 * Entry point: plots/render <recipe-file> [...more recipes]
 *
 * Loads each recipe, renders its figure and writes the PNG.  Exits nonzero
 * with a message naming the problem (missing recipe, missing input, missing
 * column, empty data).  Rendering is deterministic: identical inputs give
 * identical image bytes.
 */

import * as fs from "fs";
import * as path from "path";

import { SchemaError } from "./csv";
import { encodePng } from "./png";
import { Canvas } from "./raster";
import { FigureRecipe, loadRecipe, RecipeError } from "./recipe";
import { renderBars } from "./charts/bars";
import { renderCurves } from "./charts/curves";
import { renderHeatmapPair } from "./charts/heatmap";
import { renderZigzagPanel } from "./charts/zigzag";

export function renderRecipe(recipe: FigureRecipe): Canvas {
  switch (recipe.kind) {
    case "curves_by_kind":
      return renderCurves(recipe);
    case "heatmap_pair":
      return renderHeatmapPair(recipe);
    case "zigzag_panel":
      return renderZigzagPanel(recipe);
    case "bar_compare":
      return renderBars(recipe);
  }
}

export function renderToFile(recipePath: string): string {
  const recipe = loadRecipe(recipePath);
  const canvas = renderRecipe(recipe);
  const png = encodePng(canvas.width, canvas.height, canvas.pixels);
  fs.mkdirSync(path.dirname(recipe.output), { recursive: true });
  fs.writeFileSync(recipe.output, png);
  return recipe.output;
}

export function main(argv: string[]): number {
  if (argv.length === 0) {
    process.stderr.write("usage: render <recipe-file> [...]\n");
    return 2;
  }
  for (const recipePath of argv) {
    try {
      const out = renderToFile(recipePath);
      process.stdout.write(out + "\n");
    } catch (err) {
      if (err instanceof RecipeError || err instanceof SchemaError) {
        process.stderr.write(`render: ${err.message}\n`);
        return 1;
      }
      throw err;
    }
  }
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
