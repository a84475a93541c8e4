#!/usr/bin/env node
/* Standalone solver program. Generated — do not edit.
 *
 * Protocol: optionally takes a run-file path as argv[2]; the run file may
 * override grid shape/bounds, dt, time horizon, snapshot stride, coefficient
 * values, and the output path. Writes exactly one binary solution file and
 * exits 0 on success; any I/O or numerical failure exits nonzero with a
 * diagnostic on stderr.
 */
"use strict";
const __fs = require("fs");

function fail(msg, code) {
  process.stderr.write(String(msg) + "\n");
  process.exit(code === undefined ? 3 : code);
}

// ---- run-file protocol ------------------------------------------------------

function readRunFile() {
  const path = process.argv[2];
  if (!path) return null;
  let text;
  try {
    text = __fs.readFileSync(path, "utf8");
  } catch (err) {
    fail("cannot read run file: " + err.message, 2);
  }
  try {
    return JSON.parse(text);
  } catch (err) {
    fail("run file is not valid JSON: " + err.message, 2);
  }
}

function resolveConfig(defaults, bakedTerms) {
  const cfg = {
    shape: defaults.shape.slice(),
    bounds: defaults.bounds.map((b) => b.slice()),
    periodic: defaults.periodic.slice(),
    dt: defaults.dt,
    horizon: defaults.time_horizon,
    stride: defaults.snapshot_stride,
    outputPath: defaults.output_path,
    terms: bakedTerms,
    stage: "standalone",
  };
  const run = readRunFile();
  if (run) {
    if (run.grid) {
      if (Array.isArray(run.grid.shape)) cfg.shape = run.grid.shape.slice();
      if (Array.isArray(run.grid.bounds)) cfg.bounds = run.grid.bounds.map((b) => b.slice());
      if (Array.isArray(run.grid.periodic)) cfg.periodic = run.grid.periodic.slice();
      if (Array.isArray(run.grid.kind) && run.grid.kind.some((k) => k !== "uniform")) {
        fail("this program only solves on uniform grids", 2);
      }
    }
    if (typeof run.dt === "number") cfg.dt = run.dt;
    if (typeof run.time_horizon === "number") cfg.horizon = run.time_horizon;
    if (typeof run.snapshot_stride === "number") cfg.stride = run.snapshot_stride;
    if (typeof run.output_path === "string") cfg.outputPath = run.output_path;
    if (Array.isArray(run.coefficients)) cfg.terms = run.coefficients;
    if (typeof run.stage === "string") cfg.stage = run.stage;
  }
  if (cfg.periodic.some((p) => !p)) fail("this program only solves periodic problems", 2);
  return cfg;
}

// ---- grid -------------------------------------------------------------------

function axisNodes(lo, hi, n, periodic) {
  const out = new Float64Array(n);
  const L = hi - lo;
  if (periodic) {
    for (let j = 0; j < n; j++) out[j] = lo + (L * j) / n;
  } else {
    for (let j = 0; j < n; j++) out[j] = n === 1 ? lo : lo + (L * j) / (n - 1);
  }
  return out;
}

function makeGrid(cfg) {
  const shape = cfg.shape.map((n) => n | 0);
  const dim = shape.length;
  if (dim === 0 || shape.some((n) => n < 2)) fail("bad grid shape " + JSON.stringify(shape), 2);
  const strides = new Array(dim);
  let size = 1;
  for (let a = dim - 1; a >= 0; a--) {
    strides[a] = size;
    size *= shape[a];
  }
  const lengths = cfg.bounds.map((b) => b[1] - b[0]);
  return {
    shape,
    dim,
    size,
    strides,
    lengths,
    nodes: shape.map((n, a) => axisNodes(cfg.bounds[a][0], cfg.bounds[a][1], n, cfg.periodic[a])),
    dx: lengths.map((L, a) => L / (cfg.periodic[a] ? shape[a] : Math.max(1, shape[a] - 1))),
  };
}

function evalOnGrid(grid, fn, t) {
  const out = new Float64Array(grid.size);
  const idx = new Array(grid.dim).fill(0);
  const args = new Array(grid.dim + 1);
  args[grid.dim] = t === undefined ? 0 : t;
  for (let p = 0; p < grid.size; p++) {
    for (let a = 0; a < grid.dim; a++) args[a] = grid.nodes[a][idx[a]];
    out[p] = fn.apply(null, args);
    for (let a = grid.dim - 1; a >= 0; a--) {
      if (++idx[a] < grid.shape[a]) break;
      idx[a] = 0;
    }
  }
  return out;
}

function addOnGrid(grid, fn, t, acc) {
  const vals = evalOnGrid(grid, fn, t);
  for (let p = 0; p < grid.size; p++) acc[p] += vals[p];
}

// iterate pencils along one axis of a row-major array
function axisSweep(shape, strides, axis, fn) {
  const n = shape[axis];
  const st = strides[axis];
  let pre = 1;
  for (let a = 0; a < axis; a++) pre *= shape[a];
  const post = st;
  for (let h = 0; h < pre; h++) {
    const base0 = h * n * post;
    for (let l = 0; l < post; l++) fn(base0 + l, st, n);
  }
}

// ---- FFT (radix-2, complex as separate re/im arrays) --------------------------

function fftRadix2(re, im, invert) {
  const n = re.length;
  if (n & (n - 1)) fail("FFT size " + n + " is not a power of two", 2);
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      let t = re[i];
      re[i] = re[j];
      re[j] = t;
      t = im[i];
      im[i] = im[j];
      im[j] = t;
    }
  }
  for (let len = 2; len <= n; len <<= 1) {
    const ang = ((invert ? 2 : -2) * Math.PI) / len;
    const half = len >> 1;
    for (let i = 0; i < n; i += len) {
      for (let j = 0; j < half; j++) {
        // direct twiddle per butterfly: slower than a recurrence but free of
        // accumulated roundoff
        const cr = Math.cos(ang * j);
        const ci = Math.sin(ang * j);
        const ur = re[i + j];
        const ui = im[i + j];
        const vr = re[i + j + half] * cr - im[i + j + half] * ci;
        const vi = re[i + j + half] * ci + im[i + j + half] * cr;
        re[i + j] = ur + vr;
        im[i + j] = ui + vi;
        re[i + j + half] = ur - vr;
        im[i + j + half] = ui - vi;
      }
    }
  }
  if (invert) {
    for (let i = 0; i < n; i++) {
      re[i] /= n;
      im[i] /= n;
    }
  }
}

function fftnd(re, im, grid, invert) {
  for (let axis = 0; axis < grid.dim; axis++) {
    const n = grid.shape[axis];
    if (n === 1) continue;
    const tr = new Float64Array(n);
    const ti = new Float64Array(n);
    axisSweep(grid.shape, grid.strides, axis, (base, st) => {
      for (let j = 0; j < n; j++) {
        tr[j] = re[base + j * st];
        ti[j] = im[base + j * st];
      }
      fftRadix2(tr, ti, invert);
      for (let j = 0; j < n; j++) {
        re[base + j * st] = tr[j];
        im[base + j * st] = ti[j];
      }
    });
  }
}

function forwardHat(grid, u) {
  const re = Float64Array.from(u);
  const im = new Float64Array(grid.size);
  fftnd(re, im, grid, false);
  return { re, im };
}

function inverseReal(grid, hat) {
  const re = Float64Array.from(hat.re);
  const im = Float64Array.from(hat.im);
  fftnd(re, im, grid, true);
  return re;
}

// ---- Fourier symbols ----------------------------------------------------------

function freqIndex(j, n) {
  return j < (n + 1) / 2 ? j : j - n;
}

function axisSymbol(n, L, order) {
  const re = new Float64Array(n);
  const im = new Float64Array(n);
  for (let j = 0; j < n; j++) {
    const k = ((2 * Math.PI) / L) * freqIndex(j, n);
    const mag = Math.pow(k, order);
    switch (((order % 4) + 4) % 4) { // (i k)^order
      case 0:
        re[j] = mag;
        break;
      case 1:
        im[j] = mag;
        break;
      case 2:
        re[j] = -mag;
        break;
      default:
        im[j] = -mag;
    }
  }
  if (order % 2 === 1 && n % 2 === 0) {
    re[n / 2] = 0;
    im[n / 2] = 0;
  }
  return { re, im };
}

function termSymbol(grid, orders) {
  const axes = orders.map((o, a) => (o ? axisSymbol(grid.shape[a], grid.lengths[a], o) : null));
  const re = new Float64Array(grid.size);
  const im = new Float64Array(grid.size);
  const idx = new Array(grid.dim).fill(0);
  for (let p = 0; p < grid.size; p++) {
    let vr = 1;
    let vi = 0;
    for (let a = 0; a < grid.dim; a++) {
      const ax = axes[a];
      if (!ax) continue;
      const j = idx[a];
      const nr = vr * ax.re[j] - vi * ax.im[j];
      vi = vr * ax.im[j] + vi * ax.re[j];
      vr = nr;
    }
    re[p] = vr;
    im[p] = vi;
    for (let a = grid.dim - 1; a >= 0; a--) {
      if (++idx[a] < grid.shape[a]) break;
      idx[a] = 0;
    }
  }
  return { re, im };
}

function mulInto(outRe, outIm, aRe, aIm, bRe, bIm) {
  for (let p = 0; p < outRe.length; p++) {
    const r = aRe[p] * bRe[p] - aIm[p] * bIm[p];
    outIm[p] = aRe[p] * bIm[p] + aIm[p] * bRe[p];
    outRe[p] = r;
  }
}

function spectralDerivative(grid, u, sym) {
  const hat = forwardHat(grid, u);
  const re = new Float64Array(grid.size);
  const im = new Float64Array(grid.size);
  mulInto(re, im, hat.re, hat.im, sym.re, sym.im);
  fftnd(re, im, grid, true);
  return re;
}

function dealiasMask(grid) {
  const mask = new Uint8Array(grid.size).fill(1);
  const idx = new Array(grid.dim).fill(0);
  for (let p = 0; p < grid.size; p++) {
    for (let a = 0; a < grid.dim; a++) {
      const n = grid.shape[a];
      if (Math.abs(freqIndex(idx[a], n)) > Math.floor(n / 3)) {
        mask[p] = 0;
        break;
      }
    }
    for (let a = grid.dim - 1; a >= 0; a--) {
      if (++idx[a] < grid.shape[a]) break;
      idx[a] = 0;
    }
  }
  return mask;
}

function dealias(grid, v, mask) {
  if (!mask) return v;
  const re = Float64Array.from(v);
  const im = new Float64Array(grid.size);
  fftnd(re, im, grid, false);
  for (let p = 0; p < grid.size; p++) {
    if (!mask[p]) {
      re[p] = 0;
      im[p] = 0;
    }
  }
  fftnd(re, im, grid, true);
  return re;
}

// ---- term table ---------------------------------------------------------------

const AXES = ["x", "y", "z", "w", "v"];

function normalizeTerms(entries, dim) {
  const out = [];
  for (const entry of entries) {
    let timeOrder = 0;
    const orders = new Array(dim).fill(0);
    for (const d of entry.derivs) {
      if (d === "t") {
        timeOrder++;
        continue;
      }
      const a = AXES.indexOf(d);
      if (a < 0 || a >= dim) fail("derivative along unknown axis " + JSON.stringify(d), 2);
      orders[a]++;
    }
    if (typeof entry.value !== "number") {
      fail("non-constant coefficient on term " + JSON.stringify(entry.derivs), 2);
    }
    out.push({
      eq: entry.eq | 0,
      field: entry.field,
      timeOrder,
      orders,
      value: entry.value,
      nonlinearity: entry.nonlinearity || null,
    });
  }
  return out;
}

function splitTerms(terms, fields) {
  const c0 = new Array(fields.length).fill(null);
  const spatial = [];
  for (const t of terms) {
    if (t.timeOrder === 1 && t.orders.every((o) => o === 0)) {
      if (c0[t.eq] !== null) fail("multiple time-derivative terms in equation " + t.eq, 2);
      c0[t.eq] = t.value;
    } else if (t.timeOrder === 0) {
      spatial.push(t);
    } else {
      fail("unsupported time-derivative structure in term " + JSON.stringify(t.orders), 2);
    }
  }
  for (let eq = 0; eq < c0.length; eq++) {
    if (c0[eq] === null || c0[eq] === 0) fail("equation " + eq + " has no usable time-derivative term", 2);
  }
  return { c0, spatial };
}

// ---- time stepping --------------------------------------------------------------

const BLOWUP_FACTOR = 1e6;

function planSteps(horizon, dt) {
  if (!(horizon > 0) || !(dt > 0)) fail("bad horizon/dt: " + horizon + "/" + dt, 2);
  const steps = Math.max(1, Math.round(horizon / dt));
  return { steps, dt: horizon / steps };
}

/* Advance `state` with stepFn(state, t, n) -> state, snapshotting step 0,
 * every stride-th step, and the final step. Dies with a diagnostic when any
 * field stops being finite or exceeds BLOWUP_FACTOR x its initial magnitude. */
function march(state, stepFn, extract, steps, dt, stride) {
  stride = Math.max(1, Math.floor(stride));
  const first = extract(state);
  let ref = 1;
  for (const name of Object.keys(first)) {
    const v = first[name];
    for (let p = 0; p < v.length; p++) {
      const a = Math.abs(v[p]);
      if (a > ref) ref = a;
    }
  }
  const snaps = {};
  for (const name of Object.keys(first)) snaps[name] = [Float64Array.from(first[name])];
  const times = [0];
  for (let n = 1; n <= steps; n++) {
    state = stepFn(state, (n - 1) * dt, n - 1);
    if (n % stride === 0 || n === steps) {
      const fields = extract(state);
      for (const name of Object.keys(fields)) {
        const v = fields[name];
        for (let p = 0; p < v.length; p++) {
          if (!Number.isFinite(v[p]) || Math.abs(v[p]) > BLOWUP_FACTOR * ref) {
            fail("field " + name + " diverged at step " + n + " (t=" + n * dt + ")", 4);
          }
        }
        snaps[name].push(Float64Array.from(v));
      }
      times.push(n * dt);
    }
  }
  return { snaps, times };
}

// ---- solution-file writer --------------------------------------------------------

function sortKeys(obj) {
  const out = {};
  for (const k of Object.keys(obj).sort()) out[k] = obj[k];
  return out;
}

function writeSolutionFile(path, fieldNames, snaps, gridShape, times, meta) {
  const chunks = [];
  const head = Buffer.alloc(9);
  head.write("ANUM", 0, "ascii");
  head.writeUInt8(1, 4);
  head.writeUInt32LE(fieldNames.length, 5);
  chunks.push(head);
  for (const name of fieldNames) {
    const list = snaps[name];
    if (!list) fail("no snapshots recorded for field " + JSON.stringify(name), 3);
    const nameBuf = Buffer.from(name, "utf8");
    const rank = 1 + gridShape.length;
    const hdr = Buffer.alloc(2 + nameBuf.length + 1 + 8 * rank);
    let o = 0;
    hdr.writeUInt16LE(nameBuf.length, o);
    o += 2;
    nameBuf.copy(hdr, o);
    o += nameBuf.length;
    hdr.writeUInt8(rank, o);
    o += 1;
    hdr.writeBigUInt64LE(BigInt(list.length), o);
    o += 8;
    for (const d of gridShape) {
      hdr.writeBigUInt64LE(BigInt(d), o);
      o += 8;
    }
    chunks.push(hdr);
    for (const snap of list) {
      const buf = Buffer.alloc(8 * snap.length);
      for (let p = 0; p < snap.length; p++) buf.writeDoubleLE(snap[p], 8 * p);
      chunks.push(buf);
    }
  }
  const tbuf = Buffer.alloc(4 + 8 * times.length);
  tbuf.writeUInt32LE(times.length, 0);
  for (let i = 0; i < times.length; i++) tbuf.writeDoubleLE(times[i], 4 + 8 * i);
  chunks.push(tbuf);
  const trailer = Buffer.from(JSON.stringify(sortKeys(meta)), "utf8");
  const tlen = Buffer.alloc(4);
  tlen.writeUInt32LE(trailer.length, 0);
  chunks.push(tlen, trailer);
  try {
    __fs.writeFileSync(path, Buffer.concat(chunks));
  } catch (err) {
    fail("cannot write solution file: " + err.message, 2);
  }
}

// ---- diagnostics -------------------------------------------------------------------

function relativeDiff(a, b) {
  let num = 0;
  let den = 0;
  for (let p = 0; p < a.length; p++) {
    const d = a[p] - b[p];
    num += d * d;
    den += b[p] * b[p];
  }
  return Math.sqrt(num / a.length) / (Math.sqrt(den / a.length) + 1e-12);
}

function runMain(solve) {
  const started = Date.now();
  const cfg = resolveConfig(DEFAULTS, TERMS);
  const grid = makeGrid(cfg);
  const plan = planSteps(cfg.horizon, cfg.dt);
  let result;
  try {
    result = solve(cfg, grid, plan.steps, plan.dt);
  } catch (err) {
    fail(err && err.stack ? err.stack : String(err), 3);
  }
  const meta = {
    scheme: SCHEME,
    self_residual: result.selfResidual,
    wall_time: (Date.now() - started) / 1000,
  };
  writeSolutionFile(cfg.outputPath, FIELDS, result.snaps, grid.shape, result.times, meta);
  process.exit(0);
}
