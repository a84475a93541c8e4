/* {{TEMPLATE_ID}} :: WENO3 finite-volume marcher for {{PROBLEM_NAME}}
 *
 * Scalar conservation form u_t + div f(u) = 0 on a periodic uniform grid.
 * Per axis the flux is split Lax-Friedrichs style, f± = (f(u) ± a u)/2 with
 * a = max|f'(u)|, each half reconstructed at interfaces by third-order WENO
 * (two-point stencils, smoothness-weighted), advanced with SSP-RK3.
 * Quasi-linear transport c*u*u_x is absorbed as the quadratic flux c*u^2/2.
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

const WENO_EPS = 1e-6;

function wenoLeft(fm, fc, fp) {
  // left-biased reconstruction at interface i+1/2 from f[i-1], f[i], f[i+1]
  const p0 = -0.5 * fm + 1.5 * fc;
  const p1 = 0.5 * fc + 0.5 * fp;
  const b0 = (fc - fm) * (fc - fm);
  const b1 = (fp - fc) * (fp - fc);
  const a0 = 1 / 3 / ((WENO_EPS + b0) * (WENO_EPS + b0));
  const a1 = 2 / 3 / ((WENO_EPS + b1) * (WENO_EPS + b1));
  return (a0 * p0 + a1 * p1) / (a0 + a1);
}

function wenoRight(fc, fp, fpp) {
  // right-biased reconstruction at interface i+1/2 from f[i], f[i+1], f[i+2]
  const p0 = 1.5 * fp - 0.5 * fpp;
  const p1 = 0.5 * fp + 0.5 * fc;
  const b0 = (fpp - fp) * (fpp - fp);
  const b1 = (fp - fc) * (fp - fc);
  const a0 = 1 / 3 / ((WENO_EPS + b0) * (WENO_EPS + b0));
  const a1 = 2 / 3 / ((WENO_EPS + b1) * (WENO_EPS + b1));
  return (a0 * p0 + a1 * p1) / (a0 + a1);
}

function solve(cfg, grid, steps, dt) {
  if (FIELDS.length !== 1) fail("this scheme integrates a single field", 2);
  const fld = FIELDS[0];
  const { c0, spatial } = splitTerms(normalizeTerms(cfg.terms, grid.dim), FIELDS);
  const c = c0[0];

  // per-axis flux f_a(u) = cl*u + cq*u^2/2
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
    const f = new Float64Array(grid.size);
    const fp = new Float64Array(grid.size);
    const fm = new Float64Array(grid.size);
    for (let axis = 0; axis < grid.dim; axis++) {
      if (cl[axis] === 0 && cq[axis] === 0) continue;
      let alpha = 0;
      for (let p = 0; p < grid.size; p++) {
        const speed = Math.abs(cl[axis] + cq[axis] * u[p]);
        if (speed > alpha) alpha = speed;
      }
      for (let p = 0; p < grid.size; p++) {
        f[p] = cl[axis] * u[p] + 0.5 * cq[axis] * u[p] * u[p];
        fp[p] = 0.5 * (f[p] + alpha * u[p]);
        fm[p] = 0.5 * (f[p] - alpha * u[p]);
      }
      const n = grid.shape[axis];
      const dx = grid.dx[axis];
      const tp = new Float64Array(n);
      const tm = new Float64Array(n);
      const flux = new Float64Array(n);
      axisSweep(grid.shape, grid.strides, axis, (base, st) => {
        for (let i = 0; i < n; i++) {
          tp[i] = fp[base + i * st];
          tm[i] = fm[base + i * st];
        }
        for (let i = 0; i < n; i++) {
          const im1 = (i - 1 + n) % n;
          const ip1 = (i + 1) % n;
          const ip2 = (i + 2) % n;
          flux[i] = wenoLeft(tp[im1], tp[i], tp[ip1]) + wenoRight(tm[i], tm[ip1], tm[ip2]);
        }
        for (let i = 0; i < n; i++) {
          out[base + i * st] -= (flux[i] - flux[(i - 1 + n) % n]) / dx;
        }
      });
    }
    return out;
  }

  function stepSsp3(u, t) {
    const k1 = rhs(u, t);
    const u1 = new Float64Array(grid.size);
    for (let p = 0; p < grid.size; p++) u1[p] = u[p] + dt * k1[p];
    const k2 = rhs(u1, t + dt);
    const u2 = new Float64Array(grid.size);
    for (let p = 0; p < grid.size; p++) u2[p] = 0.75 * u[p] + 0.25 * (u1[p] + dt * k2[p]);
    const k3 = rhs(u2, t + dt / 2);
    const out = new Float64Array(grid.size);
    for (let p = 0; p < grid.size; p++) out[p] = u[p] / 3 + (2 / 3) * (u2[p] + dt * k3[p]);
    return out;
  }

  const u0 = evalOnGrid(grid, ICS[fld]);
  const { snaps, times } = march(u0, stepSsp3, (u) => ({ [fld]: u }), steps, dt, cfg.stride);

  // self-check: recompute the divergence with whole-array rolls instead of
  // pencil sweeps and compare
  function rollAxis(arr, shift, axis) {
    const out = new Float64Array(grid.size);
    const n = grid.shape[axis];
    const st = grid.strides[axis];
    axisSweep(grid.shape, grid.strides, axis, (base, stride) => {
      for (let i = 0; i < n; i++) out[base + ((i + shift + n) % n) * stride] = arr[base + i * stride];
    });
    return out;
  }
  function rhsReference(u) {
    const out = new Float64Array(grid.size);
    for (let axis = 0; axis < grid.dim; axis++) {
      if (cl[axis] === 0 && cq[axis] === 0) continue;
      let alpha = 0;
      for (let p = 0; p < grid.size; p++) {
        const speed = Math.abs(cl[axis] + cq[axis] * u[p]);
        if (speed > alpha) alpha = speed;
      }
      const fp = new Float64Array(grid.size);
      const fm = new Float64Array(grid.size);
      for (let p = 0; p < grid.size; p++) {
        const f = cl[axis] * u[p] + 0.5 * cq[axis] * u[p] * u[p];
        fp[p] = 0.5 * (f + alpha * u[p]);
        fm[p] = 0.5 * (f - alpha * u[p]);
      }
      const fpm1 = rollAxis(fp, 1, axis);
      const fpp1 = rollAxis(fp, -1, axis);
      const fmp1 = rollAxis(fm, -1, axis);
      const fmp2 = rollAxis(fm, -2, axis);
      const flux = new Float64Array(grid.size);
      for (let p = 0; p < grid.size; p++) {
        flux[p] = wenoLeft(fpm1[p], fp[p], fpp1[p]) + wenoRight(fm[p], fmp1[p], fmp2[p]);
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
