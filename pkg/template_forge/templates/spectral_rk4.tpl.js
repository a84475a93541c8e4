/* {{TEMPLATE_ID}} :: pseudo-spectral RK4 marcher for {{PROBLEM_NAME}}
 *
 * Periodic Fourier collocation: every spatial derivative is a diagonal
 * multiplier in wavenumber space. Constant-coefficient linear terms are
 * merged into one symbol per (equation, field) pair; quasi-linear terms
 * (coefficient times an evolved field) are formed pointwise in physical
 * space and de-aliased with the 2/3 rule. Classical RK4 in time.
 */

// ---- configuration (rendered, run file overrides) ----
const TEMPLATE_ID = "{{TEMPLATE_ID}}";
const SCHEME = "{{SCHEME}}";
const N = {{N}}; // nodes per axis at the {{TIER}} tier
const FIELDS = {{FIELDS_JSON}};
const TERMS = {{TERMS_JSON}};
const ICS = {{ICS_JS}};
const SOURCES = {{SOURCES_JS}};
const DEFAULTS = {
  shape: {{SHAPE_JSON}},
  bounds: {{BOUNDS_JSON}},
  periodic: {{PERIODIC_JSON}},
  dt: {{DT}},
  time_horizon: {{HORIZON}},
  snapshot_stride: {{STRIDE}},
  output_path: "{{OUTPUT_PATH}}",
};
// ---- end configuration ----

function solve(cfg, grid, steps, dt) {
  const nf = FIELDS.length;
  const fieldIndex = {};
  FIELDS.forEach((f, i) => (fieldIndex[f] = i));
  const { c0, spatial } = splitTerms(normalizeTerms(cfg.terms, grid.dim), FIELDS);

  // merge constant linear terms into one spectral symbol per (eq, field)
  const combined = new Map();
  const quasiLinear = [];
  for (const term of spatial) {
    const fi = fieldIndex[term.field];
    if (fi === undefined) fail("term references unknown field " + JSON.stringify(term.field), 2);
    const hasDeriv = term.orders.some((o) => o > 0);
    if (term.nonlinearity === null) {
      const key = term.eq * nf + fi;
      let sym = combined.get(key);
      if (!sym) {
        sym = { re: new Float64Array(grid.size), im: new Float64Array(grid.size) };
        combined.set(key, sym);
      }
      if (hasDeriv) {
        const one = termSymbol(grid, term.orders);
        for (let p = 0; p < grid.size; p++) {
          sym.re[p] += term.value * one.re[p];
          sym.im[p] += term.value * one.im[p];
        }
      } else {
        for (let p = 0; p < grid.size; p++) sym.re[p] += term.value;
      }
    } else {
      quasiLinear.push({
        term,
        fi,
        nl: fieldIndex[term.nonlinearity],
        sym: hasDeriv ? termSymbol(grid, term.orders) : null,
      });
    }
  }
  const mask = quasiLinear.length ? dealiasMask(grid) : null;

  function rhs(state, t) {
    const out = [];
    for (let eq = 0; eq < nf; eq++) out.push(new Float64Array(grid.size));
    const hats = state.map((u) => forwardHat(grid, u));
    for (const [key, sym] of combined) {
      const eq = Math.floor(key / nf);
      const fi = key % nf;
      const re = new Float64Array(grid.size);
      const im = new Float64Array(grid.size);
      mulInto(re, im, hats[fi].re, hats[fi].im, sym.re, sym.im);
      fftnd(re, im, grid, true);
      const acc = out[eq];
      for (let p = 0; p < grid.size; p++) acc[p] -= re[p];
    }
    for (const q of quasiLinear) {
      let d;
      if (q.sym) {
        const re = new Float64Array(grid.size);
        const im = new Float64Array(grid.size);
        mulInto(re, im, hats[q.fi].re, hats[q.fi].im, q.sym.re, q.sym.im);
        fftnd(re, im, grid, true);
        d = re;
      } else {
        d = state[q.fi];
      }
      const nl = state[q.nl];
      const prod = new Float64Array(grid.size);
      for (let p = 0; p < grid.size; p++) prod[p] = q.term.value * nl[p] * d[p];
      const clean = dealias(grid, prod, mask);
      const acc = out[q.term.eq];
      for (let p = 0; p < grid.size; p++) acc[p] -= clean[p];
    }
    for (let eq = 0; eq < nf; eq++) {
      const acc = out[eq];
      if (SOURCES[eq]) addOnGrid(grid, SOURCES[eq], t, acc);
      const c = c0[eq];
      for (let p = 0; p < grid.size; p++) acc[p] /= c;
    }
    return out;
  }

  // independent assembly for the self-check: term by term, one transform each
  function rhsReference(state, t) {
    const out = [];
    for (let eq = 0; eq < nf; eq++) out.push(new Float64Array(grid.size));
    for (const term of spatial) {
      const fi = fieldIndex[term.field];
      const d = term.orders.some((o) => o > 0)
        ? spectralDerivative(grid, state[fi], termSymbol(grid, term.orders))
        : state[fi];
      let val = new Float64Array(grid.size);
      for (let p = 0; p < grid.size; p++) val[p] = term.value * d[p];
      if (term.nonlinearity !== null) {
        const nl = state[fieldIndex[term.nonlinearity]];
        for (let p = 0; p < grid.size; p++) val[p] *= nl[p];
        val = dealias(grid, val, mask);
      }
      const acc = out[term.eq];
      for (let p = 0; p < grid.size; p++) acc[p] -= val[p];
    }
    for (let eq = 0; eq < nf; eq++) {
      const acc = out[eq];
      if (SOURCES[eq]) addOnGrid(grid, SOURCES[eq], t, acc);
      for (let p = 0; p < grid.size; p++) acc[p] /= c0[eq];
    }
    return out;
  }

  function addScaled(u, k, h) {
    return u.map((ui, i) => {
      const out = new Float64Array(grid.size);
      const ki = k[i];
      for (let p = 0; p < grid.size; p++) out[p] = ui[p] + h * ki[p];
      return out;
    });
  }

  function stepRk4(u, t) {
    const k1 = rhs(u, t);
    const k2 = rhs(addScaled(u, k1, dt / 2), t + dt / 2);
    const k3 = rhs(addScaled(u, k2, dt / 2), t + dt / 2);
    const k4 = rhs(addScaled(u, k3, dt), t + dt);
    return u.map((ui, i) => {
      const out = new Float64Array(grid.size);
      for (let p = 0; p < grid.size; p++) {
        out[p] = ui[p] + (dt / 6) * (k1[i][p] + 2 * k2[i][p] + 2 * k3[i][p] + k4[i][p]);
      }
      return out;
    });
  }

  const state0 = FIELDS.map((f) => evalOnGrid(grid, ICS[f]));
  const extract = (state) => {
    const out = {};
    FIELDS.forEach((f, i) => (out[f] = state[i]));
    return out;
  };
  const { snaps, times } = march(state0, stepRk4, extract, steps, dt, cfg.stride);

  const final = FIELDS.map((f) => snaps[f][snaps[f].length - 1]);
  const tEnd = times[times.length - 1];
  const a = rhs(final, tEnd);
  const b = rhsReference(final, tEnd);
  let selfResidual = 0;
  for (let eq = 0; eq < nf; eq++) selfResidual = Math.max(selfResidual, relativeDiff(a[eq], b[eq]));
  return { snaps, times, selfResidual };
}

runMain(solve);
