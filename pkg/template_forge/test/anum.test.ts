import { readFileSync, writeFileSync, appendFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { FormatError, readSolutionFile } from "../dist/anum.js";
import { ExitSignal, freshTmpDir, loadRuntime } from "./helpers.js";

const { api } = loadRuntime();

function writeSample(path: string, uValues: number[][], meta: Record<string, unknown>) {
  // two snapshots of a 2x3 grid, two fields
  const snaps = {
    u: uValues.map((v) => Float64Array.from(v)),
    v: uValues.map((v) => Float64Array.from(v.map((x) => -x))),
  };
  api.writeSolutionFile(path, ["u", "v"], snaps, [2, 3], [0, 0.5], meta);
}

describe("solution-file round trip", () => {
  it("reads back exactly what the rendered-program writer produced", () => {
    const dir = freshTmpDir("anum-");
    const path = join(dir, "sol.anum");
    const a = [1, 2, 3, 4, 5, 6];
    const b = [0.5, -1.25, 3e-7, 1e12, -0.0, 7];
    writeSample(path, [a, b], { scheme: "test", self_residual: 1e-9, wall_time: 0.01 });

    const sol = readSolutionFile(readFileSync(path));
    expect(Object.keys(sol.fields).sort()).toEqual(["u", "v"]);
    expect(sol.fields.u.dims).toEqual([2, 2, 3]);
    expect(Array.from(sol.fields.u.data)).toEqual([...a, ...b]);
    expect(Array.from(sol.fields.v.data)).toEqual([...a.map((x) => -x), ...b.map((x) => -x)]);
    expect(sol.times).toEqual([0, 0.5]);
    expect(sol.meta).toEqual({ scheme: "test", self_residual: 1e-9, wall_time: 0.01 });
  });

  it("passes NaN through untouched: writing never validates the payload", () => {
    const dir = freshTmpDir("anum-");
    const path = join(dir, "sol.anum");
    writeSample(path, [[1, 2, NaN, 4, 5, 6], [7, 8, 9, 10, 11, 12]], { scheme: "t" });
    const sol = readSolutionFile(readFileSync(path));
    expect(Number.isNaN(sol.fields.u.data[2])).toBe(true);
    expect(sol.fields.u.data[3]).toBe(4);
  });

  it("keeps trailer keys sorted so byte output is deterministic", () => {
    const dir = freshTmpDir("anum-");
    const p1 = join(dir, "a.anum");
    const p2 = join(dir, "b.anum");
    writeSample(p1, [[1, 2, 3, 4, 5, 6], [1, 2, 3, 4, 5, 6]], { b: 1, a: 2 });
    writeSample(p2, [[1, 2, 3, 4, 5, 6], [1, 2, 3, 4, 5, 6]], { a: 2, b: 1 });
    expect(readFileSync(p1).equals(readFileSync(p2))).toBe(true);
  });
});

describe("solution-file reader rejects malformed input", () => {
  function sampleBytes(): Buffer {
    const dir = freshTmpDir("anum-");
    const path = join(dir, "sol.anum");
    writeSample(path, [[1, 2, 3, 4, 5, 6], [7, 8, 9, 10, 11, 12]], { scheme: "t" });
    return readFileSync(path);
  }

  it("bad magic", () => {
    const buf = sampleBytes();
    buf.write("XNUM", 0, "ascii");
    expect(() => readSolutionFile(buf)).toThrow(FormatError);
  });

  it("unknown version", () => {
    const buf = sampleBytes();
    buf.writeUInt8(9, 4);
    expect(() => readSolutionFile(buf)).toThrow(/version/);
  });

  it("truncated payload", () => {
    const buf = sampleBytes();
    expect(() => readSolutionFile(buf.subarray(0, buf.length - 10))).toThrow(FormatError);
  });

  it("trailing bytes after the trailer", () => {
    const dir = freshTmpDir("anum-");
    const path = join(dir, "sol.anum");
    writeSample(path, [[1, 2, 3, 4, 5, 6], [7, 8, 9, 10, 11, 12]], { scheme: "t" });
    appendFileSync(path, Buffer.from([0]));
    expect(() => readSolutionFile(readFileSync(path))).toThrow(/trailing/);
  });

  it("absurd field count", () => {
    const buf = sampleBytes();
    buf.writeUInt32LE(65, 5);
    expect(() => readSolutionFile(buf)).toThrow(FormatError);
  });

  it("empty file", () => {
    expect(() => readSolutionFile(Buffer.alloc(0))).toThrow(FormatError);
  });
});

describe("writer failure modes", () => {
  it("refuses to write when a field has no snapshots, via exit code 3", () => {
    const dir = freshTmpDir("anum-");
    expect(() =>
      api.writeSolutionFile(join(dir, "x.anum"), ["u", "missing"], { u: [Float64Array.from([1])] }, [1], [0], {}),
    ).toThrow(ExitSignal);
  });

  it("unwritable path exits with the resource code", () => {
    try {
      writeSample("/nonexistent-dir/sol.anum", [[1, 2, 3, 4, 5, 6], [1, 2, 3, 4, 5, 6]], {});
      expect.unreachable("write should have failed");
    } catch (err) {
      expect(err).toBeInstanceOf(ExitSignal);
      expect((err as ExitSignal).code).toBe(2);
    }
  });
});
