/**
 * Turns a solver template plus a problem document into a standalone Node
 * program that speaks the executor's run-file/solution-file protocol.
 *
 * Rendering bakes in everything the program cannot learn at runtime (initial
 * conditions, sources, the term table, tier defaults); the rendered program
 * still reads the run file passed as argv[2] and lets it override grid shape,
 * dt, horizon, snapshot stride, output path, and coefficient values.
 */

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import * as path from "node:path";

import { compileExpr, compileFunction, evalConstant, isConstant } from "./expr.js";
import {
  AXIS_NAMES,
  coefficientTable,
  ProblemDoc,
  sourceList,
  summarize,
  StructuralSummary,
  termShape,
  TermShape,
} from "./problem.js";

export class PlaceholderError extends Error {}

export type Tier = "low" | "medium" | "high";
export const TIER_NODES: Record<Tier, number> = { low: 64, medium: 128, high: 256 };

/** Coarse-stage step budget used by the conformance eligibility check. */
export const STEP_BUDGET_COARSE = 40_000;

const TEMPLATE_DIR = path.join(path.dirname(fileURLToPath(import.meta.url)), "..", "templates");

// ---------------------------------------------------------------------------
// stability-rate bookkeeping shared by the per-template time-step rules

interface Rates {
  /** summed |c/c0| * prod(kmax^order) over every spatial term (nonlinear terms
   * scaled by the initial amplitude with headroom) — an explicit-integrator
   * spectral-radius estimate */
  total: number;
  /** same, but only terms the ETDRK4 integrator treats explicitly */
  explicitOnly: number;
  /** per-axis transport speed |c/c0| (+ amplitude-scaled quasi-linear part) */
  speed: number[];
}

function initialAmplitude(doc: ProblemDoc): number {
  const dim = doc.domain.dim;
  const axes = AXIS_NAMES.slice(0, dim);
  const per = dim <= 2 ? 33 : 9;
  let amp = 0;
  for (const src of Object.values(doc.initial)) {
    const fn = Function(...axes, `"use strict"; return (${compileExpr(src, axes)});`) as (
      ...xs: number[]
    ) => number;
    const idx = new Array<number>(dim).fill(0);
    const total = per ** dim;
    for (let p = 0; p < total; p++) {
      const args = idx.map(
        (i, a) => doc.domain.bounds[a][0] + ((doc.domain.bounds[a][1] - doc.domain.bounds[a][0]) * i) / (per - 1),
      );
      const v = Math.abs(fn(...args));
      if (v > amp) amp = v;
      for (let a = dim - 1; a >= 0; a--) {
        if (++idx[a] < per) break;
        idx[a] = 0;
      }
    }
  }
  return Math.max(amp, 1e-12);
}

function stabilityRates(doc: ProblemDoc, shape: number[]): Rates {
  const dim = doc.domain.dim;
  const entries = coefficientTable(doc).map((e) => termShape(e, dim));
  const kmax = shape.map((n, a) => (Math.PI * n) / (doc.domain.bounds[a][1] - doc.domain.bounds[a][0]));
  const c0 = new Map<number, number>();
  for (const t of entries) {
    if (t.timeOrder === 1 && t.orders.every((o) => o === 0) && t.value) c0.set(t.eq, Math.abs(t.value));
  }
  const amp = entries.some((t) => t.nonlinearity) ? initialAmplitude(doc) : 1;
  let total = 0;
  let explicitOnly = 0;
  const speed = new Array<number>(dim).fill(0);
  for (const t of entries) {
    if (t.timeOrder > 0) continue;
    const scale = c0.get(t.eq) ?? 1;
    let c = Math.abs(t.value ?? 0) / scale;
    if (t.nonlinearity) c *= 1.2 * amp;
    let rate = c;
    for (let a = 0; a < dim; a++) rate *= kmax[a] ** t.orders[a];
    total += rate;
    if (t.nonlinearity) explicitOnly += rate;
    const orderSum = t.orders.reduce((x, y) => x + y, 0);
    if (orderSum === 1) {
      const axis = t.orders.findIndex((o) => o === 1);
      speed[axis] += c;
    }
  }
  return { total, explicitOnly, speed };
}

// ---------------------------------------------------------------------------
// template registry

interface TemplateDef {
  id: string;
  scheme: string;
  family: string;
  faultInjection: boolean;
  gate(doc: ProblemDoc, s: StructuralSummary): string | null;
  dtRule(doc: ProblemDoc, shape: number[], horizon: number): number;
}

function marchingGate(doc: ProblemDoc, s: StructuralSummary): string | null {
  if (s.steady) return "steady-state problem, nothing to march (family mismatch)";
  if (!(doc.domain.time_horizon && doc.domain.time_horizon > 0)) return "problem has no time horizon";
  if (!s.periodic) return "requires fully periodic boundaries (family mismatch)";
  if (!s.constantCoefficients) return "requires constant coefficients";
  if (!s.firstOrderTime) return "requires one first-order time derivative per equation";
  return null;
}

function scalarFluxGate(doc: ProblemDoc, s: StructuralSummary): string | null {
  const shared = marchingGate(doc, s);
  if (shared) return shared;
  if (s.fields.length !== 1) return "handles a single unknown field";
  if (!s.pureFirstOrder) return "handles first-order (flux-form) spatial terms only";
  if (!s.zeroSource) return "handles source-free conservation laws only";
  const field = s.fields[0];
  const entries = coefficientTable(doc).map((e) => termShape(e, doc.domain.dim));
  for (const t of entries) {
    if (t.timeOrder === 0 && t.nonlinearity !== null && t.nonlinearity !== field) {
      return `nonlinearity ${JSON.stringify(t.nonlinearity)} is not the evolved field`;
    }
  }
  return null;
}

function dxMin(doc: ProblemDoc, shape: number[]): number {
  return Math.min(...shape.map((n, a) => (doc.domain.bounds[a][1] - doc.domain.bounds[a][0]) / n));
}

function cflRule(cfl: number) {
  return (doc: ProblemDoc, shape: number[], horizon: number): number => {
    const rates = stabilityRates(doc, shape);
    let dt = horizon;
    for (let a = 0; a < shape.length; a++) {
      if (rates.speed[a] > 0) {
        const dx = (doc.domain.bounds[a][1] - doc.domain.bounds[a][0]) / shape[a];
        dt = Math.min(dt, (cfl * dx) / rates.speed[a]);
      }
    }
    return dt;
  };
}

const TEMPLATES: TemplateDef[] = [
  {
    id: "spectral_rk4",
    scheme: "fourier_rk4",
    family: "fourier_spectral",
    faultInjection: false,
    gate(doc, s) {
      const shared = marchingGate(doc, s);
      if (shared) return shared;
      const entries = coefficientTable(doc).map((e) => termShape(e, doc.domain.dim));
      for (const t of entries) {
        if (t.nonlinearity !== null && !s.fields.includes(t.nonlinearity)) {
          return `nonlinearity ${JSON.stringify(t.nonlinearity)} is not a solved field`;
        }
      }
      return null;
    },
    dtRule(doc, shape, horizon) {
      const rate = stabilityRates(doc, shape).total;
      return rate > 0 ? Math.min(horizon, (0.7 * 2.5) / rate) : horizon / 200;
    },
  },
  {
    id: "spectral_etdrk4",
    scheme: "fourier_etdrk4",
    family: "fourier_spectral",
    faultInjection: false,
    gate(doc, s) {
      const shared = marchingGate(doc, s);
      if (shared) return shared;
      if (s.fields.length !== 1) return "handles a single unknown field";
      const entries = coefficientTable(doc).map((e) => termShape(e, doc.domain.dim));
      for (const t of entries) {
        if (t.nonlinearity !== null && t.nonlinearity !== s.fields[0]) {
          return `nonlinearity ${JSON.stringify(t.nonlinearity)} is not the evolved field`;
        }
      }
      return null;
    },
    dtRule(doc, shape, horizon) {
      const rate = stabilityRates(doc, shape).explicitOnly;
      const base = horizon / 256;
      return rate > 0 ? Math.min(base, (0.7 * 2.5) / rate) : base;
    },
  },
  {
    id: "weno3_rk3",
    scheme: "weno3_ssp_rk3",
    family: "finite_volume",
    faultInjection: false,
    gate: scalarFluxGate,
    dtRule: cflRule(0.4),
  },
  {
    id: "muscl_rk2",
    scheme: "muscl_rk2",
    family: "finite_volume",
    faultInjection: false,
    gate: scalarFluxGate,
    dtRule: cflRule(0.35),
  },
  {
    id: "semi_lagrangian",
    scheme: "semi_lagrangian_cubic",
    family: "semi_lagrangian",
    faultInjection: false,
    gate(doc, s) {
      const shared = scalarFluxGate(doc, s);
      if (shared) return shared;
      if (s.hasNonlinearity) return "handles constant-speed linear transport only";
      return null;
    },
    dtRule: (_doc, _shape, horizon) => horizon / 200,
  },
  {
    id: "buggy_reference",
    scheme: "fourier_rk4",
    family: "fourier_spectral",
    faultInjection: true,
    gate: marchingGate,
    dtRule(doc, shape, horizon) {
      const rate = stabilityRates(doc, shape).total;
      return rate > 0 ? Math.min(horizon, (0.7 * 2.5) / rate) : horizon / 200;
    },
  },
  {
    id: "central_explicit",
    scheme: "central_forward_euler",
    family: "finite_difference",
    faultInjection: true,
    gate(doc, s) {
      const shared = marchingGate(doc, s);
      if (shared) return shared;
      if (s.fields.length !== 1) return "handles a single unknown field";
      if (!s.pureFirstOrder) return "handles first-order transport terms only";
      if (s.hasNonlinearity) return "handles constant-speed linear transport only";
      return null;
    },
    dtRule: cflRule(0.9),
  },
];

export function listTemplates(): { id: string; scheme: string; family: string; faultInjection: boolean }[] {
  return TEMPLATES.map(({ id, scheme, family, faultInjection }) => ({ id, scheme, family, faultInjection }));
}

function getTemplate(id: string): TemplateDef {
  const def = TEMPLATES.find((t) => t.id === id);
  if (!def) {
    const known = TEMPLATES.map((t) => t.id).join(", ");
    throw new PlaceholderError(`unknown template ${JSON.stringify(id)} (known: ${known})`);
  }
  return def;
}

// ---------------------------------------------------------------------------
// tier defaults

export interface RunParams {
  shape: number[];
  dt: number;
  steps: number;
  stride: number;
  horizon: number;
  bounds: [number, number][];
  periodic: boolean[];
}

function planSteps(horizon: number, dt: number): { steps: number; dt: number } {
  const steps = Math.max(1, Math.round(horizon / dt));
  return { steps, dt: horizon / steps };
}

export function defaultRunParams(doc: ProblemDoc, tier: Tier, templateId: string): RunParams {
  const def = getTemplate(templateId);
  const n = TIER_NODES[tier];
  const shape = doc.domain.bounds.map(() => n);
  const horizon = doc.domain.time_horizon ?? 0;
  if (!(horizon > 0)) throw new PlaceholderError("problem has no time horizon");
  const { steps, dt } = planSteps(horizon, def.dtRule(doc, shape, horizon));
  return {
    shape,
    dt,
    steps,
    stride: Math.max(1, Math.ceil(steps / 100)),
    horizon,
    bounds: doc.domain.bounds.map((b) => [b[0], b[1]] as [number, number]),
    periodic: doc.domain.bounds.map(() => true),
  };
}

/** The executor's coarse-stage transform: quarter the grid, stretch dt to match. */
export function coarsen(params: RunParams): RunParams {
  const shape = params.shape.map((n) => Math.max(16, Math.round(n / 4)));
  const { steps, dt } = planSteps(params.horizon, params.dt * 4);
  return { ...params, shape, dt, steps, stride: Math.max(1, Math.ceil(steps / 100)) };
}

/**
 * Conformance eligibility: which corpus problems a template is expected to
 * solve end-to-end within the coarse budget.  Fault-injection templates are
 * never eligible — failing is their job.
 */
export function conformanceReason(templateId: string, doc: ProblemDoc, tier: Tier): string | null {
  const def = getTemplate(templateId);
  if (def.faultInjection) return "fault-injection template";
  const gate = def.gate(doc, summarize(doc));
  if (gate) return gate;
  const coarse = coarsen(defaultRunParams(doc, tier, templateId));
  if (coarse.steps > STEP_BUDGET_COARSE) {
    return `needs ${coarse.steps} coarse steps (budget ${STEP_BUDGET_COARSE})`;
  }
  return null;
}

// ---------------------------------------------------------------------------
// rendering

const PLACEHOLDER = /\{\{([A-Z0-9_]+)\}\}/g;

function numberLiteral(x: number): string {
  const s = String(x);
  return Number(s) === x ? s : x.toPrecision(17);
}

export function renderTemplate(id: string, doc: ProblemDoc, tier: Tier = "medium"): string {
  const def = getTemplate(id);
  const s = summarize(doc);
  const gate = def.gate(doc, s);
  if (gate) throw new PlaceholderError(`template ${id} cannot solve ${doc.name}: ${gate}`);

  const params = defaultRunParams(doc, tier, id);
  const dim = doc.domain.dim;
  const axes = AXIS_NAMES.slice(0, dim);
  const fields = doc.pde.unknowns;

  const icEntries = fields.map((f) => {
    const src = doc.initial[f];
    if (src === undefined) throw new PlaceholderError(`no initial condition for field ${JSON.stringify(f)}`);
    return `  ${JSON.stringify(f)}: ${compileFunction(src, axes)},`;
  });
  const srcEntries = sourceList(doc).map((src) => {
    if (isConstant(src) && evalConstant(src) === 0) return "  null,";
    return `  ${compileFunction(src, [...axes, "t"])},`;
  });

  const bake: Record<string, string> = {
    TEMPLATE_ID: def.id,
    SCHEME: def.scheme,
    PROBLEM_NAME: doc.name,
    TIER: tier,
    N: String(TIER_NODES[tier]),
    FIELDS_JSON: JSON.stringify(fields),
    TERMS_JSON: JSON.stringify(coefficientTable(doc)),
    ICS_JS: `{\n${icEntries.join("\n")}\n}`,
    SOURCES_JS: `[\n${srcEntries.join("\n")}\n]`,
    SHAPE_JSON: JSON.stringify(params.shape),
    BOUNDS_JSON: JSON.stringify(params.bounds),
    PERIODIC_JSON: JSON.stringify(params.periodic),
    DT: numberLiteral(params.dt),
    HORIZON: numberLiteral(params.horizon),
    STRIDE: String(params.stride),
    OUTPUT_PATH: "solution.anum",
  };

  const prelude = readFileSync(path.join(TEMPLATE_DIR, "_prelude.js"), "utf8");
  const body = readFileSync(path.join(TEMPLATE_DIR, `${def.id}.tpl.js`), "utf8");
  const rendered = body.replace(PLACEHOLDER, (whole, name: string) => bake[name] ?? whole);

  const leftover = [...rendered.matchAll(PLACEHOLDER)].map((m) => m[1]);
  if (leftover.length) {
    throw new PlaceholderError(`unresolved placeholders in ${def.id}: ${[...new Set(leftover)].join(", ")}`);
  }
  return `${prelude}\n${rendered}`;
}
