/* {{TEMPLATE_ID}} :: MUSCL finite-volume marcher for {{PROBLEM_NAME}}
 *
 * Scalar conservation form on a periodic uniform grid. Cell values are
 * extended to interfaces with minmod-limited linear slopes, the interface
 * flux is Rusanov (local Lax-Friedrichs), time stepping is Heun's
 * second-order predictor-corrector. Quasi-linear transport c*u*u_x is
 * absorbed as the quadratic flux c*u^2/2.
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

function minmod(a, b) {
  if (a * b <= 0) return 0;
  return Math.abs(a) < Math.abs(b) ? a : b;
}

function solve(cfg, grid, steps, dt) {
  if (FIELDS.length !== 1) fail("this scheme integrates a single field", 2);
  const fld = FIELDS[0];
  const { c0, spatial } = splitTerms(normalizeTerms(cfg.terms, grid.dim), FIELDS);
  const c = c0[0];

  const cl = new Float64Array(grid.dim);
  const cq = new Float64Array(grid.dim);
  for (const term of spatial) {
    const total = term.orders.reduce((x, y) => x + y, 0);
    if (total !== 1) fail("non-transport term in flux-form solver", 2);
    const axis = term.orders.findIndex((o) => o === 1);
    if (term.nonlinearity === null) cl[axis] += term.value / c;
    else if (term.nonlinearity === fld) cq[axis] += term.value / c;
    else fail("nonlinearity " + JSON.stringify(term.nonlinearity) + " is not the evolved field", 2);
  }

  function rhs(u) {
    const out = new Float64Array(grid.size);
    for (let axis = 0; axis < grid.dim; axis++) {
      if (cl[axis] === 0 && cq[axis] === 0) continue;
      const n = grid.shape[axis];
      const dx = grid.dx[axis];
      const cell = new Float64Array(n);
      const slope = new Float64Array(n);
      const flux = new Float64Array(n);
      const a = cl[axis];
      const b = cq[axis];
      axisSweep(grid.shape, grid.strides, axis, (base, st) => {
        for (let i = 0; i < n; i++) cell[i] = u[base + i * st];
        for (let i = 0; i < n; i++) {
          slope[i] = minmod(cell[i] - cell[(i - 1 + n) % n], cell[(i + 1) % n] - cell[i]);
        }
        for (let i = 0; i < n; i++) {
          const ip1 = (i + 1) % n;
          const uL = cell[i] + 0.5 * slope[i];
          const uR = cell[ip1] - 0.5 * slope[ip1];
          const fL = a * uL + 0.5 * b * uL * uL;
          const fR = a * uR + 0.5 * b * uR * uR;
          const speed = Math.max(Math.abs(a + b * uL), Math.abs(a + b * uR));
          flux[i] = 0.5 * (fL + fR) - 0.5 * speed * (uR - uL);
        }
        for (let i = 0; i < n; i++) {
          out[base + i * st] -= (flux[i] - flux[(i - 1 + n) % n]) / dx;
        }
      });
    }
    return out;
  }

  function stepHeun(u, t) {
    const k1 = rhs(u, t);
    const u1 = new Float64Array(grid.size);
    for (let p = 0; p < grid.size; p++) u1[p] = u[p] + dt * k1[p];
    const k2 = rhs(u1, t + dt);
    const out = new Float64Array(grid.size);
    for (let p = 0; p < grid.size; p++) out[p] = 0.5 * (u[p] + u1[p] + dt * k2[p]);
    return out;
  }

  const u0 = evalOnGrid(grid, ICS[fld]);
  const { snaps, times } = march(u0, stepHeun, (u) => ({ [fld]: u }), steps, dt, cfg.stride);

  // self-check: same discretization assembled with whole-array rolls
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
      if (cl[axis] === 0 && cq[axis] === 0) continue;
      const a = cl[axis];
      const b = cq[axis];
      const um1 = rollAxis(u, 1, axis);
      const up1 = rollAxis(u, -1, axis);
      const slope = new Float64Array(grid.size);
      for (let p = 0; p < grid.size; p++) slope[p] = minmod(u[p] - um1[p], up1[p] - u[p]);
      const slopeP1 = rollAxis(slope, -1, axis);
      const flux = new Float64Array(grid.size);
      for (let p = 0; p < grid.size; p++) {
        const uL = u[p] + 0.5 * slope[p];
        const uR = up1[p] - 0.5 * slopeP1[p];
        const fL = a * uL + 0.5 * b * uL * uL;
        const fR = a * uR + 0.5 * b * uR * uR;
        const speed = Math.max(Math.abs(a + b * uL), Math.abs(a + b * uR));
        flux[p] = 0.5 * (fL + fR) - 0.5 * speed * (uR - uL);
      }
      const prev = rollAxis(flux, 1, axis);
      for (let p = 0; p < grid.size; p++) out[p] -= (flux[p] - prev[p]) / grid.dx[axis];
    }
    return out;
  }

  const finalU = snaps[fld][snaps[fld].length - 1];
  return { snaps, times, selfResidual: relativeDiff(rhs(finalU), rhsReference(finalU)) };
}

runMain(solve);
