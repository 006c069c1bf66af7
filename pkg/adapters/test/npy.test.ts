import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import { readNpy, writeNpy } from "../src/npy.js";

const FIXTURES = path.join(__dirname, "..", "fixtures");

function tmpFile(name: string): string {
  return path.join(mkdtempSync(path.join(tmpdir(), "npy-")), name);
}

describe("npy", () => {
  it("round-trips shapes and values", () => {
    for (const shape of [[4], [2, 3], [2, 2, 5], [0]]) {
      const count = shape.reduce((a, b) => a * b, 1);
      const data = new Float32Array(count);
      for (let i = 0; i < count; i++) data[i] = Math.fround(Math.sin(i) * 3);
      const p = tmpFile("t.npy");
      writeNpy(p, { shape, data });
      const back = readNpy(p);
      expect(back.shape).toEqual(shape);
      expect(Array.from(back.data)).toEqual(Array.from(data));
    }
  });

  it("keeps the data section 64-byte aligned", () => {
    const p = tmpFile("t.npy");
    writeNpy(p, { shape: [3], data: new Float32Array([1, 2, 3]) });
    const raw = readFileSync(p);
    const headerLen = raw.readUInt16LE(8);
    expect((10 + headerLen) % 64).toBe(0);
    expect(raw.length).toBe(10 + headerLen + 12);
  });

  it("reads a file written by the Python side bit-exactly", () => {
    const fixture = path.join(FIXTURES, "python_written.npy");
    const tensor = readNpy(fixture);
    expect(tensor.shape).toEqual([2, 3]);
    expect(Array.from(tensor.data)).toEqual([0, 0.5, -1.5, 2.25, -3.125, 4.0625]);
    // and writing the same tensor reproduces the same bytes
    const p = tmpFile("twin.npy");
    writeNpy(p, tensor);
    expect(readFileSync(p).equals(readFileSync(fixture))).toBe(true);
  });

  it("rejects non-float32 and corrupt files", () => {
    const p = tmpFile("bad.npy");
    writeFileSync(p, Buffer.from("not an array file at all, padding padding"));
    expect(() => readNpy(p)).toThrow(/not an array file/);

    const f64 = path.join(FIXTURES, "python_float64.npy");
    expect(() => readNpy(f64)).toThrow(/float32/);
  });

  it("rejects mismatched shape/data", () => {
    expect(() => writeNpy(tmpFile("x.npy"), { shape: [3], data: new Float32Array(2) })).toThrow(/match/);
  });
});
