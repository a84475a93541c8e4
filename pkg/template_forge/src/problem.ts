/**
 * Problem-document model: the JSON shape consumed by the solver pipeline,
 * reduced to what a rendered program needs baked in.
 */

import { evalConstant, isConstant } from "./expr.js";

export const AXIS_NAMES = ["x", "y", "z", "w", "v"] as const;

export interface RawTerm {
  coeff: string;
  derivs: string[];
  eq?: number;
  field?: string;
  nonlinearity?: string | null;
}

export interface ProblemDoc {
  name: string;
  domain: { bounds: [number, number][]; dim: number; time_horizon?: number };
  boundary: { axis: number; kind: string; side: string }[];
  initial: Record<string, string>;
  pde: {
    linearity: string;
    source: string | string[];
    terms: RawTerm[];
    type_class: string;
    unknowns: string[];
  };
  reference?: unknown;
}

/**
 * A term in the shape the executor's run file uses, so rendered programs can
 * treat baked terms and run-file coefficient overrides identically.
 */
export interface CoefficientEntry {
  derivs: string[];
  eq: number;
  field: string;
  nonlinearity: string | null;
  value?: number;
  expression?: string;
}

export class IncompatibleProblem extends Error {}

export function coefficientTable(doc: ProblemDoc): CoefficientEntry[] {
  const unknowns = doc.pde.unknowns;
  return doc.pde.terms.map((term) => {
    const eq = term.eq ?? 0;
    const entry: CoefficientEntry = {
      derivs: [...term.derivs],
      eq,
      field: term.field ?? unknowns[eq] ?? unknowns[0],
      nonlinearity: term.nonlinearity ?? null,
    };
    if (isConstant(term.coeff)) {
      entry.value = evalConstant(term.coeff);
    } else {
      entry.expression = term.coeff;
    }
    return entry;
  });
}

export interface TermShape {
  eq: number;
  field: string;
  timeOrder: number;
  orders: number[]; // per spatial axis
  value: number | null; // null when the coefficient is not a constant
  nonlinearity: string | null;
}

export function termShape(entry: CoefficientEntry, dim: number): TermShape {
  const orders = new Array<number>(dim).fill(0);
  let timeOrder = 0;
  for (const name of entry.derivs) {
    if (name === "t") {
      timeOrder++;
      continue;
    }
    const axis = AXIS_NAMES.indexOf(name as (typeof AXIS_NAMES)[number]);
    if (axis < 0 || axis >= dim) {
      throw new IncompatibleProblem(`derivative along unknown axis ${JSON.stringify(name)}`);
    }
    orders[axis]++;
  }
  return {
    eq: entry.eq,
    field: entry.field,
    timeOrder,
    orders,
    value: entry.value ?? null,
    nonlinearity: entry.nonlinearity,
  };
}

export function sourceList(doc: ProblemDoc): string[] {
  const src = doc.pde.source;
  const list = Array.isArray(src) ? src : [src];
  const n = doc.pde.unknowns.length;
  if (list.length === 1 && n > 1) return new Array(n).fill(list[0]);
  if (list.length !== n) throw new IncompatibleProblem(`${list.length} sources for ${n} unknowns`);
  return list;
}

export function isPeriodic(doc: ProblemDoc): boolean {
  return doc.boundary.length > 0 && doc.boundary.every((bc) => bc.kind === "periodic");
}

export function isSteadyState(doc: ProblemDoc): boolean {
  return doc.pde.terms.every((term) => !term.derivs.includes("t"));
}

export interface StructuralSummary {
  dim: number;
  fields: string[];
  periodic: boolean;
  steady: boolean;
  /** every coefficient evaluates to a constant */
  constantCoefficients: boolean;
  /** every evolved equation has exactly one first-order time term with constant coefficient */
  firstOrderTime: boolean;
  /** largest spatial derivative order appearing in any term */
  maxSpatialOrder: number;
  /** true when some term carries a nonlinearity factor */
  hasNonlinearity: boolean;
  /** all spatial terms are first-order (transport form) */
  pureFirstOrder: boolean;
  /** the source expressions are all literally zero */
  zeroSource: boolean;
}

export function summarize(doc: ProblemDoc): StructuralSummary {
  const dim = doc.domain.dim;
  const entries = coefficientTable(doc);
  const shapes = entries.map((e) => termShape(e, dim));
  const fields = doc.pde.unknowns;

  const timeTerms = new Map<number, TermShape[]>();
  for (const s of shapes) {
    if (s.timeOrder > 0) {
      const list = timeTerms.get(s.eq) ?? [];
      list.push(s);
      timeTerms.set(s.eq, list);
    }
  }
  let firstOrderTime = timeTerms.size === fields.length;
  for (const list of timeTerms.values()) {
    if (list.length !== 1) firstOrderTime = false;
    for (const s of list) {
      if (s.timeOrder !== 1 || s.orders.some((o) => o > 0) || s.value === null || s.value === 0) {
        firstOrderTime = false;
      }
    }
  }

  const spatial = shapes.filter((s) => s.timeOrder === 0);
  const sources = sourceList(doc);
  return {
    dim,
    fields,
    periodic: isPeriodic(doc),
    steady: isSteadyState(doc),
    constantCoefficients: entries.every((e) => e.value !== undefined),
    firstOrderTime,
    maxSpatialOrder: Math.max(0, ...spatial.map((s) => s.orders.reduce((a, b) => a + b, 0))),
    hasNonlinearity: shapes.some((s) => s.nonlinearity !== null),
    pureFirstOrder: spatial.every((s) => s.orders.reduce((a, b) => a + b, 0) === 1),
    zeroSource: sources.every((s) => isConstant(s) && evalConstant(s) === 0),
  };
}

export function loadProblem(jsonText: string): ProblemDoc {
  const doc = JSON.parse(jsonText) as ProblemDoc;
  for (const key of ["name", "domain", "pde", "initial"] as const) {
    if (!(key in doc)) throw new IncompatibleProblem(`problem document lacks ${JSON.stringify(key)}`);
  }
  if (!Array.isArray(doc.pde.terms) || doc.pde.terms.length === 0) {
    throw new IncompatibleProblem("problem document has no terms");
  }
  return doc;
}
