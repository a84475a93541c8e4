/**
 * Render CLI:
 *
 *     node bin/render.mjs <template> <problem.json> <out.js> [--tier low|medium|high]
 *     node bin/render.mjs --list
 */

import { readFileSync, writeFileSync } from "node:fs";

import { loadProblem } from "./problem.js";
import { listTemplates, PlaceholderError, renderTemplate, Tier } from "./render.js";

const USAGE =
  "usage: render <template> <problem.json> <out.js> [--tier low|medium|high]\n" +
  "       render --list";

export function main(argv: string[]): number {
  const positional: string[] = [];
  let tier: Tier = "medium";
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--list") {
      for (const t of listTemplates()) {
        process.stdout.write(`${t.id}\t${t.family}\t${t.scheme}${t.faultInjection ? "\t(fault injection)" : ""}\n`);
      }
      return 0;
    }
    if (arg === "--tier") {
      const value = argv[++i];
      if (value !== "low" && value !== "medium" && value !== "high") {
        process.stderr.write(`bad tier ${JSON.stringify(value)}\n${USAGE}\n`);
        return 2;
      }
      tier = value;
      continue;
    }
    if (arg.startsWith("-")) {
      process.stderr.write(`unknown option ${JSON.stringify(arg)}\n${USAGE}\n`);
      return 2;
    }
    positional.push(arg);
  }
  if (positional.length !== 3) {
    process.stderr.write(`${USAGE}\n`);
    return 2;
  }
  const [templateId, problemPath, outPath] = positional;
  try {
    const doc = loadProblem(readFileSync(problemPath, "utf8"));
    writeFileSync(outPath, renderTemplate(templateId, doc, tier));
  } catch (err) {
    if (err instanceof PlaceholderError) {
      process.stderr.write(`render failed: ${err.message}\n`);
      return 1;
    }
    process.stderr.write(`${(err as Error).stack ?? err}\n`);
    return 1;
  }
  return 0;
}
