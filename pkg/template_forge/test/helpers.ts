import { readFileSync, mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { createRequire } from "node:module";

const HERE = fileURLToPath(new URL(".", import.meta.url));

export const FORGE_ROOT = join(HERE, "..");
export const CORPUS_DIR = join(FORGE_ROOT, "..", "src", "pdepilot", "corpus");
export const RENDER_CLI = join(FORGE_ROOT, "bin", "render.mjs");

/** Thrown by the stubbed process.exit so in-process prelude calls are catchable. */
export class ExitSignal extends Error {
  code: number;
  constructor(code: number) {
    super(`exit(${code})`);
    this.code = code;
  }
}

export interface Runtime {
  api: Record<string, any>;
  stderr: () => string;
}

/**
 * Evaluate the shared runtime that gets pasted into every rendered program,
 * with process stubbed out so `fail()` raises instead of killing the worker.
 */
export function loadRuntime(): Runtime {
  const raw = readFileSync(join(FORGE_ROOT, "templates", "_prelude.js"), "utf8");
  const src = raw.replace(/^#![^\n]*\n/, ""); // shebang is illegal inside Function
  let captured = "";
  const fakeProcess = {
    argv: ["node", "program.js"],
    exit(code: number): never {
      throw new ExitSignal(code ?? 0);
    },
    stderr: {
      write(chunk: string) {
        captured += chunk;
        return true;
      },
    },
  };
  const names = [
    "fail",
    "readRunFile",
    "resolveConfig",
    "axisNodes",
    "makeGrid",
    "evalOnGrid",
    "addOnGrid",
    "axisSweep",
    "fftRadix2",
    "fftnd",
    "forwardHat",
    "inverseReal",
    "freqIndex",
    "axisSymbol",
    "termSymbol",
    "mulInto",
    "spectralDerivative",
    "dealiasMask",
    "dealias",
    "normalizeTerms",
    "splitTerms",
    "planSteps",
    "march",
    "sortKeys",
    "writeSolutionFile",
    "relativeDiff",
    "BLOWUP_FACTOR",
    "AXES",
  ];
  const factory = new Function(
    "require",
    "process",
    `${src}\nreturn { ${names.join(", ")} };`,
  );
  const api = factory(createRequire(import.meta.url), fakeProcess);
  return { api, stderr: () => captured };
}

export function loadCorpusProblem(name: string): any {
  return JSON.parse(readFileSync(join(CORPUS_DIR, `${name}.spec.json`), "utf8"));
}

export function freshTmpDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), prefix));
}

/** Build a run file the way the pipeline's executor writes them. */
export function buildRunFile(opts: {
  problemPath: string;
  params: {
    shape: number[];
    dt: number;
    horizon: number;
    stride: number;
    bounds: number[][];
    periodic: boolean[];
  };
  coefficients: any[];
  outputPath: string;
  stage?: string;
  plan?: Record<string, unknown>;
}): any {
  return {
    problem: opts.problemPath,
    stage: opts.stage ?? "coarse",
    plan: opts.plan ?? { family: "external", scheme: "external", marching: "external" },
    grid: {
      kind: opts.params.shape.map(() => "uniform"),
      shape: opts.params.shape,
      bounds: opts.params.bounds,
      periodic: opts.params.periodic,
    },
    dt: opts.params.dt,
    time_horizon: opts.params.horizon,
    snapshot_stride: opts.params.stride,
    coefficients: opts.coefficients,
    output_path: opts.outputPath,
  };
}
