/* {{TEMPLATE_ID}} :: exponential (ETDRK4) Fourier marcher for {{PROBLEM_NAME}}
 *
 * Single evolved field. The constant-coefficient linear part is diagonal in
 * wavenumber space and integrated exactly through its exponential; whatever
 * remains (quasi-linear terms, sources) goes through the fourth-order ETD
 * Runge-Kutta stages of Cox & Matthews. The phi-function weights are
 * evaluated by contour quadrature on the unit circle so small |dt*L| does
 * not cancel catastrophically.
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
  const c = c0[0];

  // split: constant linear terms -> diagonal symbol L, the rest stays explicit
  const Lre = new Float64Array(grid.size);
  const Lim = new Float64Array(grid.size);
  const explicitTerms = [];
  for (const term of spatial) {
    if (term.field !== fld) fail("term references unknown field " + JSON.stringify(term.field), 2);
    const hasDeriv = term.orders.some((o) => o > 0);
    if (term.nonlinearity === null) {
      if (hasDeriv) {
        const sym = termSymbol(grid, term.orders);
        for (let p = 0; p < grid.size; p++) {
          Lre[p] -= (term.value * sym.re[p]) / c;
          Lim[p] -= (term.value * sym.im[p]) / c;
        }
      } else {
        for (let p = 0; p < grid.size; p++) Lre[p] -= term.value / c;
      }
    } else {
      explicitTerms.push({ term, sym: hasDeriv ? termSymbol(grid, term.orders) : null });
    }
  }
  const mask = explicitTerms.some((e) => e.term.nonlinearity) ? dealiasMask(grid) : null;
  const hasRemainder = explicitTerms.length > 0 || SOURCES[0] !== null;

  // complex scalar helpers for the contour quadrature
  function cDiv(ar, ai, br, bi) {
    const d = br * br + bi * bi;
    return [(ar * br + ai * bi) / d, (ai * br - ar * bi) / d];
  }

  const M = 32;
  const Ere = new Float64Array(grid.size);
  const Eim = new Float64Array(grid.size);
  const E2re = new Float64Array(grid.size);
  const E2im = new Float64Array(grid.size);
  const Qre = new Float64Array(grid.size);
  const Qim = new Float64Array(grid.size);
  const F1re = new Float64Array(grid.size);
  const F1im = new Float64Array(grid.size);
  const F2re = new Float64Array(grid.size);
  const F2im = new Float64Array(grid.size);
  const F3re = new Float64Array(grid.size);
  const F3im = new Float64Array(grid.size);
  for (let p = 0; p < grid.size; p++) {
    const hr = dt * Lre[p];
    const hi = dt * Lim[p];
    const mag = Math.exp(hr);
    Ere[p] = mag * Math.cos(hi);
    Eim[p] = mag * Math.sin(hi);
    const mag2 = Math.exp(hr / 2);
    E2re[p] = mag2 * Math.cos(hi / 2);
    E2im[p] = mag2 * Math.sin(hi / 2);
    if (!hasRemainder) continue; // phi weights never used
    let qr = 0, qi = 0, f1r = 0, f1i = 0, f2r = 0, f2i = 0, f3r = 0, f3i = 0;
    for (let m = 0; m < M; m++) {
      const ang = (Math.PI * (m + 0.5)) / M;
      const lr = hr + Math.cos(ang);
      const li = hi + Math.sin(ang);
      const er = Math.exp(lr) * Math.cos(li);
      const ei = Math.exp(lr) * Math.sin(li);
      const e2r = Math.exp(lr / 2) * Math.cos(li / 2);
      const e2i = Math.exp(lr / 2) * Math.sin(li / 2);
      const l2r = lr * lr - li * li;
      const l2i = 2 * lr * li;
      const l3r = l2r * lr - l2i * li;
      const l3i = l2r * li + l2i * lr;
      let [vr, vi] = cDiv(e2r - 1, e2i, lr, li);
      qr += vr;
      qi += vi;
      // f1: (-4 - lr + elr (4 - 3 lr + lr^2)) / lr^3
      let nr = 4 - 3 * lr + l2r;
      let ni = -3 * li + l2i;
      [vr, vi] = cDiv(-4 - lr + (er * nr - ei * ni), -li + (er * ni + ei * nr), l3r, l3i);
      f1r += vr;
      f1i += vi;
      // f2: (2 + lr + elr (-2 + lr)) / lr^3
      [vr, vi] = cDiv(2 + lr + (er * (lr - 2) - ei * li), li + (er * li + ei * (lr - 2)), l3r, l3i);
      f2r += vr;
      f2i += vi;
      // f3: (-4 - 3 lr - lr^2 + elr (4 - lr)) / lr^3
      nr = 4 - lr;
      ni = -li;
      [vr, vi] = cDiv(-4 - 3 * lr - l2r + (er * nr - ei * ni), -3 * li - l2i + (er * ni + ei * nr), l3r, l3i);
      f3r += vr;
      f3i += vi;
    }
    Qre[p] = (dt * qr) / M;
    Qim[p] = (dt * qi) / M;
    F1re[p] = (dt * f1r) / M;
    F1im[p] = (dt * f1i) / M;
    F2re[p] = (dt * f2r) / M;
    F2im[p] = (dt * f2i) / M;
    F3re[p] = (dt * f3r) / M;
    F3im[p] = (dt * f3i) / M;
  }

  // explicit remainder in hat space: fft((source - sum explicit terms) / c0)
  function nHat(v, t) {
    const u = inverseReal(grid, v);
    const fu = forwardHat(grid, u);
    const acc = new Float64Array(grid.size);
    if (SOURCES[0]) addOnGrid(grid, SOURCES[0], t, acc);
    for (const { term, sym } of explicitTerms) {
      let d;
      if (sym) {
        const re = new Float64Array(grid.size);
        const im = new Float64Array(grid.size);
        mulInto(re, im, fu.re, fu.im, sym.re, sym.im);
        fftnd(re, im, grid, true);
        d = re;
      } else {
        d = u;
      }
      let val = new Float64Array(grid.size);
      for (let p = 0; p < grid.size; p++) val[p] = term.value * d[p];
      if (term.nonlinearity !== null) {
        for (let p = 0; p < grid.size; p++) val[p] *= u[p];
        val = dealias(grid, val, mask);
      }
      for (let p = 0; p < grid.size; p++) acc[p] -= val[p];
    }
    for (let p = 0; p < grid.size; p++) acc[p] /= c;
    return forwardHat(grid, acc);
  }

  function lc(outRe, outIm, aRe, aIm, scaleRe, scaleIm, addRe, addIm) {
    // out = scale . a + add   (pointwise complex)
    for (let p = 0; p < grid.size; p++) {
      outRe[p] = scaleRe[p] * aRe[p] - scaleIm[p] * aIm[p] + (addRe ? addRe[p] : 0);
      outIm[p] = scaleRe[p] * aIm[p] + scaleIm[p] * aRe[p] + (addIm ? addIm[p] : 0);
    }
  }

  function step(v, t) {
    const out = { re: new Float64Array(grid.size), im: new Float64Array(grid.size) };
    if (!hasRemainder) {
      lc(out.re, out.im, v.re, v.im, Ere, Eim, null, null);
      return out;
    }
    const nv = nHat(v, t);
    const a = { re: new Float64Array(grid.size), im: new Float64Array(grid.size) };
    const qnv = { re: new Float64Array(grid.size), im: new Float64Array(grid.size) };
    lc(qnv.re, qnv.im, nv.re, nv.im, Qre, Qim, null, null);
    lc(a.re, a.im, v.re, v.im, E2re, E2im, qnv.re, qnv.im);
    const na = nHat(a, t + dt / 2);
    const b = { re: new Float64Array(grid.size), im: new Float64Array(grid.size) };
    const qna = { re: new Float64Array(grid.size), im: new Float64Array(grid.size) };
    lc(qna.re, qna.im, na.re, na.im, Qre, Qim, null, null);
    lc(b.re, b.im, v.re, v.im, E2re, E2im, qna.re, qna.im);
    const nb = nHat(b, t + dt / 2);
    const cstage = { re: new Float64Array(grid.size), im: new Float64Array(grid.size) };
    const mix = { re: new Float64Array(grid.size), im: new Float64Array(grid.size) };
    for (let p = 0; p < grid.size; p++) {
      mix.re[p] = 2 * nb.re[p] - nv.re[p];
      mix.im[p] = 2 * nb.im[p] - nv.im[p];
    }
    const qmix = { re: new Float64Array(grid.size), im: new Float64Array(grid.size) };
    lc(qmix.re, qmix.im, mix.re, mix.im, Qre, Qim, null, null);
    lc(cstage.re, cstage.im, a.re, a.im, E2re, E2im, qmix.re, qmix.im);
    const nc = nHat(cstage, t + dt);
    for (let p = 0; p < grid.size; p++) {
      const evr = Ere[p] * v.re[p] - Eim[p] * v.im[p];
      const evi = Ere[p] * v.im[p] + Eim[p] * v.re[p];
      const f1r = F1re[p] * nv.re[p] - F1im[p] * nv.im[p];
      const f1i = F1re[p] * nv.im[p] + F1im[p] * nv.re[p];
      const sabr = na.re[p] + nb.re[p];
      const sabi = na.im[p] + nb.im[p];
      const f2r = 2 * (F2re[p] * sabr - F2im[p] * sabi);
      const f2i = 2 * (F2re[p] * sabi + F2im[p] * sabr);
      const f3r = F3re[p] * nc.re[p] - F3im[p] * nc.im[p];
      const f3i = F3re[p] * nc.im[p] + F3im[p] * nc.re[p];
      out.re[p] = evr + f1r + f2r + f3r;
      out.im[p] = evi + f1i + f2i + f3i;
    }
    return out;
  }

  const u0 = evalOnGrid(grid, ICS[fld]);
  const v0 = forwardHat(grid, u0);
  const extract = (v) => ({ [fld]: inverseReal(grid, v) });
  const { snaps, times } = march(v0, (v, t) => step(v, t), extract, steps, dt, cfg.stride);

  // self-check: assembled L-symbol path vs term-by-term physical assembly
  const finalU = snaps[fld][snaps[fld].length - 1];
  const tEnd = times[times.length - 1];
  const hat = forwardHat(grid, finalU);
  const lin = { re: new Float64Array(grid.size), im: new Float64Array(grid.size) };
  mulInto(lin.re, lin.im, hat.re, hat.im, Lre, Lim);
  const pathA = inverseReal(grid, lin);
  if (hasRemainder) {
    const rem = inverseReal(grid, nHat(hat, tEnd));
    for (let p = 0; p < grid.size; p++) pathA[p] += rem[p];
  }
  const pathB = new Float64Array(grid.size);
  if (SOURCES[0]) addOnGrid(grid, SOURCES[0], tEnd, pathB);
  for (const term of spatial) {
    const d = term.orders.some((o) => o > 0)
      ? spectralDerivative(grid, finalU, termSymbol(grid, term.orders))
      : finalU;
    let val = new Float64Array(grid.size);
    for (let p = 0; p < grid.size; p++) val[p] = term.value * d[p];
    if (term.nonlinearity !== null) {
      for (let p = 0; p < grid.size; p++) val[p] *= finalU[p];
      val = dealias(grid, val, mask);
    }
    for (let p = 0; p < grid.size; p++) pathB[p] -= val[p];
  }
  for (let p = 0; p < grid.size; p++) pathB[p] /= c;

  return { snaps, times, selfResidual: relativeDiff(pathA, pathB) };
}

runMain(solve);
