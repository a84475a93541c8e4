/* {{TEMPLATE_ID}} :: central-difference forward-Euler marcher for {{PROBLEM_NAME}}
 *
 * Fault-injection template: second-order central differencing of the
 * transport terms combined with forward Euler. For pure advection the
 * semi-discrete eigenvalues sit on the imaginary axis, which forward Euler
 * does not enclose at any time step, so every mode grows a little each step
 * and the run eventually diverges. The program is honest about it: the
 * blow-up guard aborts with a diagnostic and a nonzero exit.
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
  if (FIELDS.length !== 1) fail("this scheme integrates a single field", 2);
  const fld = FIELDS[0];
  const { c0, spatial } = splitTerms(normalizeTerms(cfg.terms, grid.dim), FIELDS);

  const speed = new Float64Array(grid.dim);
  for (const term of spatial) {
    const total = term.orders.reduce((x, y) => x + y, 0);
    if (total !== 1 || term.nonlinearity !== null) {
      fail("this scheme handles constant-speed linear transport only", 2);
    }
    speed[term.orders.findIndex((o) => o === 1)] += term.value / c0[0];
  }

  function rhs(u) {
    const out = new Float64Array(grid.size);
    for (let axis = 0; axis < grid.dim; axis++) {
      if (speed[axis] === 0) continue;
      const n = grid.shape[axis];
      const scale = speed[axis] / (2 * grid.dx[axis]);
      const line = new Float64Array(n);
      axisSweep(grid.shape, grid.strides, axis, (base, st) => {
        for (let i = 0; i < n; i++) line[i] = u[base + i * st];
        for (let i = 0; i < n; i++) {
          out[base + i * st] -= scale * (line[(i + 1) % n] - line[(i - 1 + n) % n]);
        }
      });
    }
    return out;
  }

  function stepEuler(u) {
    const k = rhs(u);
    const out = new Float64Array(grid.size);
    for (let p = 0; p < grid.size; p++) out[p] = u[p] + dt * k[p];
    return out;
  }

  const u0 = evalOnGrid(grid, ICS[fld]);
  const { snaps, times } = march(u0, (u) => stepEuler(u), (u) => ({ [fld]: u }), steps, dt, cfg.stride);

  // self-check: same stencil assembled with whole-array rolls
  function rollAxis(arr, shift, axis) {
    const out = new Float64Array(grid.size);
    const n = grid.shape[axis];
    axisSweep(grid.shape, grid.strides, axis, (base, st) => {
      for (let i = 0; i < n; i++) out[base + ((i + shift + n) % n) * st] = arr[base + i * st];
    });
    return out;
  }
  function rhsReference(u) {
    const out = new Float64Array(grid.size);
    for (let axis = 0; axis < grid.dim; axis++) {
      if (speed[axis] === 0) continue;
      const scale = speed[axis] / (2 * grid.dx[axis]);
      const up1 = rollAxis(u, -1, axis);
      const um1 = rollAxis(u, 1, axis);
      for (let p = 0; p < grid.size; p++) out[p] -= scale * (up1[p] - um1[p]);
    }
    return out;
  }

  const finalU = snaps[fld][snaps[fld].length - 1];
  return { snaps, times, selfResidual: relativeDiff(rhs(finalU), rhsReference(finalU)) };
}

runMain(solve);
