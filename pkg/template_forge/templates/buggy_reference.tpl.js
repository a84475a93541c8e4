/* {{TEMPLATE_ID}} :: pseudo-spectral RK4 marcher for {{PROBLEM_NAME}}
 *
 * Fault-injection twin of the spectral RK4 template: renders cleanly but the
 * program text is not valid JavaScript (a dropped parenthesis in the RHS
 * assembly), so the interpreter rejects it at parse time. Exercises the
 * executor's logic-failure and repair paths with a deterministic trigger.
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
  const { c0, spatial } = splitTerms(normalizeTerms(cfg.terms, grid.dim), FIELDS);
  const fieldIndex = {};
  FIELDS.forEach((f, i) => (fieldIndex[f] = i));

  function rhs(state, t) {
    const out = FIELDS.map(() => new Float64Array(grid.size));
    for (const term of spatial) {
      const fi = fieldIndex[term.field];
      const d = spectralDerivative(grid, state[fi], termSymbol(grid, term.orders);
      const acc = out[term.eq];
      for (let p = 0; p < grid.size; p++) acc[p] -= term.value * d[p];
    }
    for (let eq = 0; eq < FIELDS.length; eq++) {
      const acc = out[eq];
      for (let p = 0; p < grid.size; p++) acc[p] /= c0[eq];
    }
    return out;
  }

  function stepRk4(u, t) {
    const k1 = rhs(u, t);
    const k2 = rhs(u.map((ui, i) => ui.map((v, p) => v + (dt / 2) * k1[i][p])), t + dt / 2);
    const k3 = rhs(u.map((ui, i) => ui.map((v, p) => v + (dt / 2) * k2[i][p])), t + dt / 2);
    const k4 = rhs(u.map((ui, i) => ui.map((v, p) => v + dt * k3[i][p])), t + dt);
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
  return { snaps, times, selfResidual: 0 };
}

runMain(solve);
