/**
 * Figure recipes: small flat key-value files, one output image per recipe.
 *
 *   kind = curves_by_kind            # heatmap_pair | zigzag_panel | bar_compare
 *   input = out/fig3a_linear.csv     # or input.plan / input.empirical pairs
 *   output = figures/fig3a.png
 *   title = ...
 *   x_label = ...
 *   y_label = ...
 *
 * Relative paths are resolved against the recipe file's directory.  A '*'
 * in the basename of an input expands to the single matching file.
 */

import * as fs from "fs";
import * as path from "path";

export const FIGURE_KINDS = ["heatmap_pair", "curves_by_kind", "zigzag_panel", "bar_compare"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureRecipe {
  kind: FigureKind;
  inputs: Record<string, string>;
  output: string;
  title: string;
  xLabel: string;
  yLabel: string;
  options: Record<string, string>;
}

export class RecipeError extends Error {}

export function parseKeyValues(text: string): Record<string, string> {
  const out: Record<string, string> = {};
  text.split(/\r?\n/).forEach((raw, i) => {
    const line = raw.split("#", 1)[0].trim();
    if (line === "") return;
    const eq = line.indexOf("=");
    if (eq < 0) {
      throw new RecipeError(`recipe line ${i + 1}: expected 'key = value', got '${raw}'`);
    }
    out[line.slice(0, eq).trim()] = line.slice(eq + 1).trim();
  });
  return out;
}

function expandGlob(pattern: string): string {
  const base = path.basename(pattern);
  if (!base.includes("*")) return pattern;
  const dir = path.dirname(pattern);
  if (!fs.existsSync(dir)) {
    throw new RecipeError(`input directory not found: ${dir}`);
  }
  const rx = new RegExp(
    "^" + base.split("*").map((p) => p.replace(/[.+?^${}()|[\]\\]/g, "\\$&")).join(".*") + "$"
  );
  const matches = fs
    .readdirSync(dir)
    .filter((f) => rx.test(f))
    .sort();
  if (matches.length === 0) {
    throw new RecipeError(`no file matches input glob: ${pattern}`);
  }
  return path.join(dir, matches[0]);
}

export function loadRecipe(recipePath: string): FigureRecipe {
  if (!fs.existsSync(recipePath)) {
    throw new RecipeError(`recipe file not found: ${recipePath}`);
  }
  const values = parseKeyValues(fs.readFileSync(recipePath, "utf-8"));
  const kind = values["kind"];
  if (!FIGURE_KINDS.includes(kind as FigureKind)) {
    throw new RecipeError(`unknown figure kind '${kind}'; choose from ${FIGURE_KINDS.join(", ")}`);
  }
  const dir = path.dirname(path.resolve(recipePath));
  const resolve = (p: string) => (path.isAbsolute(p) ? p : path.join(dir, p));

  const inputs: Record<string, string> = {};
  for (const [key, value] of Object.entries(values)) {
    if (key === "input") inputs["input"] = expandGlob(resolve(value));
    else if (key.startsWith("input.")) inputs[key.slice(6)] = expandGlob(resolve(value));
  }
  if (Object.keys(inputs).length === 0) {
    throw new RecipeError("recipe declares no inputs");
  }
  for (const file of Object.values(inputs)) {
    if (!fs.existsSync(file)) {
      throw new RecipeError(`input file not found: ${file}`);
    }
  }
  if (!values["output"]) {
    throw new RecipeError("recipe declares no output image path");
  }

  const options: Record<string, string> = {};
  for (const [key, value] of Object.entries(values)) {
    if (!["kind", "output", "title", "x_label", "y_label"].includes(key) && !key.startsWith("input")) {
      options[key] = value;
    }
  }
  return {
    kind: kind as FigureKind,
    inputs,
    output: resolve(values["output"]),
    title: values["title"] ?? "",
    xLabel: values["x_label"] ?? "",
    yLabel: values["y_label"] ?? "",
    options,
  };
}
