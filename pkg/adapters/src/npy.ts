/**
 * Float32 array files in the interchange format the pipeline shares:
 * magic \x93NUMPY, version 1.0, little-endian u16 header length, ASCII
 * header dict space-padded (newline terminated) so the payload starts on a
 * 64-byte boundary, then raw little-endian float32 data in row-major order.
 * The header string is rendered byte-for-byte the way the Python side
 * writes it, so identical tensors produce identical files in both
 * languages.
 */

import * as fs from "node:fs";

const MAGIC = Buffer.from([0x93, 0x4e, 0x55, 0x4d, 0x50, 0x59]); // \x93NUMPY
const VERSION = Buffer.from([0x01, 0x00]);
const ALIGN = 64;

export interface Tensor {
  shape: number[];
  data: Float32Array;
}

function shapeRepr(shape: number[]): string {
  if (shape.length === 0) return "()";
  const body = shape.map((d) => String(d)).join(", ");
  return shape.length === 1 ? `(${body},)` : `(${body})`;
}

export function writeNpy(path: string, tensor: Tensor): void {
  const count = tensor.shape.reduce((a, b) => a * b, 1);
  if (count !== tensor.data.length) {
    throw new Error(`shape ${JSON.stringify(tensor.shape)} does not match ${tensor.data.length} elements`);
  }
  const headerBody = `{'descr': '<f4', 'fortran_order': False, 'shape': ${shapeRepr(tensor.shape)}, }`;
  const base = MAGIC.length + 2 + 2 + headerBody.length + 1;
  const padding = (ALIGN - (base % ALIGN)) % ALIGN;
  const header = headerBody + " ".repeat(padding) + "\n";
  const lengthField = Buffer.alloc(2);
  lengthField.writeUInt16LE(header.length, 0);
  const payload = Buffer.from(tensor.data.buffer, tensor.data.byteOffset, tensor.data.byteLength);
  fs.writeFileSync(path, Buffer.concat([MAGIC, VERSION, lengthField, Buffer.from(header, "latin1"), payload]));
}

export function readNpy(path: string): Tensor {
  const raw = fs.readFileSync(path);
  if (raw.length < 10 || !raw.subarray(0, 6).equals(MAGIC)) {
    throw new Error(`${path}: not an array file`);
  }
  if (raw[6] !== 1 || raw[7] !== 0) {
    throw new Error(`${path}: unsupported format version ${raw[6]}.${raw[7]}`);
  }
  const headerLen = raw.readUInt16LE(8);
  const header = raw.subarray(10, 10 + headerLen).toString("latin1");
  if (!header.includes("'<f4'")) {
    throw new Error(`${path}: only little-endian float32 is supported`);
  }
  if (/'fortran_order':\s*True/.test(header)) {
    throw new Error(`${path}: fortran_order arrays not supported`);
  }
  const shapeMatch = header.match(/'shape':\s*\(([^)]*)\)/);
  if (!shapeMatch) throw new Error(`${path}: malformed header`);
  const shape = shapeMatch[1]
    .split(",")
    .map((s) => s.trim())
    .filter((s) => s.length > 0)
    .map((s) => Number.parseInt(s, 10));
  const count = shape.reduce((a, b) => a * b, 1);
  const start = 10 + headerLen;
  if (raw.length < start + count * 4) {
    throw new Error(`${path}: truncated payload`);
  }
  const copy = Buffer.alloc(count * 4);
  raw.copy(copy, 0, start, start + count * 4);
  return { shape, data: new Float32Array(copy.buffer, 0, count) };
}
