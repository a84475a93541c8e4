/**
 * Reader for the binary solution-file exchange format (all little-endian):
 *
 *     magic "ANUM", version byte 0x01
 *     u32 field_count
 *     per field: u16 name length, UTF-8 name, u8 rank,
 *                rank x u64 dims (dims[0] = snapshot count),
 *                prod(dims) f64 values, row-major
 *     u32 snapshot_count, snapshot_count x f64 snapshot times
 *     u32 trailer length, UTF-8 JSON trailer
 *
 * Rendered programs carry their own writer; this reader exists so the test
 * suite can validate their output independently, byte for byte.
 */

import { readFileSync } from "node:fs";

export class FormatError extends Error {}

export interface SolutionFieldData {
  dims: number[];
  data: Float64Array;
}

export interface SolutionData {
  fields: Record<string, SolutionFieldData>;
  times: Float64Array;
  meta: Record<string, unknown>;
}

class Cursor {
  pos = 0;
  readonly view: DataView;

  constructor(readonly buf: Buffer) {
    this.view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
  }

  take(n: number): Buffer {
    if (this.pos + n > this.buf.length) throw new FormatError("solution file truncated");
    const out = this.buf.subarray(this.pos, this.pos + n);
    this.pos += n;
    return out;
  }

  u8(): number {
    return this.take(1)[0];
  }

  u16(): number {
    if (this.pos + 2 > this.buf.length) throw new FormatError("solution file truncated");
    const v = this.view.getUint16(this.pos, true);
    this.pos += 2;
    return v;
  }

  u32(): number {
    if (this.pos + 4 > this.buf.length) throw new FormatError("solution file truncated");
    const v = this.view.getUint32(this.pos, true);
    this.pos += 4;
    return v;
  }

  u64(): number {
    if (this.pos + 8 > this.buf.length) throw new FormatError("solution file truncated");
    const v = this.view.getBigUint64(this.pos, true);
    this.pos += 8;
    if (v > BigInt(Number.MAX_SAFE_INTEGER)) throw new FormatError(`implausible dimension ${v}`);
    return Number(v);
  }

  f64Array(count: number): Float64Array {
    const bytes = this.take(8 * count);
    const out = new Float64Array(count);
    const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
    for (let i = 0; i < count; i++) out[i] = view.getFloat64(8 * i, true);
    return out;
  }
}

export function readSolutionFile(filePath: string): SolutionData {
  const cur = new Cursor(readFileSync(filePath));
  if (cur.take(4).toString("ascii") !== "ANUM") throw new FormatError(`${filePath}: bad magic`);
  const version = cur.u8();
  if (version !== 1) throw new FormatError(`${filePath}: unsupported version ${version}`);
  const fieldCount = cur.u32();
  if (fieldCount > 64) throw new FormatError(`${filePath}: implausible field count ${fieldCount}`);
  const fields: Record<string, SolutionFieldData> = {};
  for (let f = 0; f < fieldCount; f++) {
    const nameLen = cur.u16();
    const name = cur.take(nameLen).toString("utf8");
    const rank = cur.u8();
    const dims: number[] = [];
    for (let r = 0; r < rank; r++) dims.push(cur.u64());
    const count = dims.reduce((a, b) => a * b, 1);
    if (count > 200_000_000) throw new FormatError(`${filePath}: field ${name} too large`);
    fields[name] = { dims, data: cur.f64Array(count) };
  }
  const snapshotCount = cur.u32();
  const times = cur.f64Array(snapshotCount);
  const trailerLen = cur.u32();
  let meta: unknown;
  try {
    meta = JSON.parse(cur.take(trailerLen).toString("utf8"));
  } catch (err) {
    throw new FormatError(`${filePath}: bad trailer: ${(err as Error).message}`);
  }
  if (cur.pos !== cur.buf.length) {
    throw new FormatError(`${filePath}: ${cur.buf.length - cur.pos} trailing bytes`);
  }
  for (const [name, field] of Object.entries(fields)) {
    if (field.dims[0] !== snapshotCount) {
      throw new FormatError(
        `${filePath}: field ${name} has ${field.dims[0]} snapshots, header says ${snapshotCount}`,
      );
    }
  }
  return {
    fields,
    times,
    meta: (typeof meta === "object" && meta !== null ? meta : { note: meta }) as Record<string, unknown>,
  };
}
