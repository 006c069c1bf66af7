/**
 * Minimal media loading and audio preprocessing.
 *
 * Images: binary PPM (P6, 8-bit). Audio: WAV with 16-bit PCM or 32-bit
 * float samples. Clips are mixed down to mono (channel mean), linearly
 * resampled to the target rate, and zero-padded at the end up to the clip
 * length; `padded` reports whether padding was applied so manifests can
 * flag short inputs.
 */

import * as fs from "node:fs";

export const TARGET_SAMPLE_RATE = 48000;
export const CLIP_SECONDS = 10;

export interface RgbImage {
  width: number;
  height: number;
  pixels: Uint8Array; // row-major RGB triples
}

export function readPpm(path: string): RgbImage {
  const raw = fs.readFileSync(path);
  let offset = 0;
  const token = (): string => {
    while (offset < raw.length && /\s/.test(String.fromCharCode(raw[offset]))) offset++;
    if (raw[offset] === 0x23) {
      // comment line
      while (offset < raw.length && raw[offset] !== 0x0a) offset++;
      return token();
    }
    const start = offset;
    while (offset < raw.length && !/\s/.test(String.fromCharCode(raw[offset]))) offset++;
    return raw.subarray(start, offset).toString("ascii");
  };
  const magic = token();
  if (magic !== "P6") throw new Error(`${path}: expected binary PPM (P6)`);
  const width = Number.parseInt(token(), 10);
  const height = Number.parseInt(token(), 10);
  const maxval = Number.parseInt(token(), 10);
  if (maxval !== 255) throw new Error(`${path}: only 8-bit PPM supported`);
  offset += 1; // single whitespace after maxval
  const need = width * height * 3;
  if (raw.length < offset + need) throw new Error(`${path}: truncated pixel data`);
  return { width, height, pixels: new Uint8Array(raw.subarray(offset, offset + need)) };
}

export function writePpm(path: string, image: RgbImage): void {
  const header = Buffer.from(`P6\n${image.width} ${image.height}\n255\n`, "ascii");
  fs.writeFileSync(path, Buffer.concat([header, Buffer.from(image.pixels)]));
}

export interface AudioClip {
  sampleRate: number;
  samples: Float64Array; // mono
}

export function readWav(path: string): AudioClip {
  const raw = fs.readFileSync(path);
  if (raw.toString("ascii", 0, 4) !== "RIFF" || raw.toString("ascii", 8, 12) !== "WAVE") {
    throw new Error(`${path}: not a WAV file`);
  }
  let offset = 12;
  let format = 0;
  let channels = 0;
  let sampleRate = 0;
  let bitsPerSample = 0;
  let dataStart = -1;
  let dataLength = 0;
  while (offset + 8 <= raw.length) {
    const chunkId = raw.toString("ascii", offset, offset + 4);
    const chunkSize = raw.readUInt32LE(offset + 4);
    if (chunkId === "fmt ") {
      format = raw.readUInt16LE(offset + 8);
      channels = raw.readUInt16LE(offset + 10);
      sampleRate = raw.readUInt32LE(offset + 12);
      bitsPerSample = raw.readUInt16LE(offset + 22);
    } else if (chunkId === "data") {
      dataStart = offset + 8;
      dataLength = chunkSize;
    }
    offset += 8 + chunkSize + (chunkSize % 2);
  }
  if (dataStart < 0 || channels === 0) throw new Error(`${path}: missing fmt/data chunk`);
  const bytesPerSample = bitsPerSample / 8;
  const frames = Math.floor(dataLength / (bytesPerSample * channels));
  const samples = new Float64Array(frames);
  for (let i = 0; i < frames; i++) {
    let acc = 0;
    for (let c = 0; c < channels; c++) {
      const at = dataStart + (i * channels + c) * bytesPerSample;
      if (format === 1 && bitsPerSample === 16) {
        acc += raw.readInt16LE(at) / 32768;
      } else if (format === 3 && bitsPerSample === 32) {
        acc += raw.readFloatLE(at);
      } else {
        throw new Error(`${path}: unsupported WAV encoding (format ${format}, ${bitsPerSample}-bit)`);
      }
    }
    samples[i] = acc / channels;
  }
  return { sampleRate, samples };
}

export function writeWavPcm16(path: string, clip: AudioClip): void {
  const n = clip.samples.length;
  const data = Buffer.alloc(n * 2);
  for (let i = 0; i < n; i++) {
    const v = Math.max(-1, Math.min(1, clip.samples[i]));
    data.writeInt16LE(Math.round(v * 32767), i * 2);
  }
  const header = Buffer.alloc(44);
  header.write("RIFF", 0, "ascii");
  header.writeUInt32LE(36 + data.length, 4);
  header.write("WAVE", 8, "ascii");
  header.write("fmt ", 12, "ascii");
  header.writeUInt32LE(16, 16);
  header.writeUInt16LE(1, 20); // PCM
  header.writeUInt16LE(1, 22); // mono
  header.writeUInt32LE(clip.sampleRate, 24);
  header.writeUInt32LE(clip.sampleRate * 2, 28);
  header.writeUInt16LE(2, 32);
  header.writeUInt16LE(16, 34);
  header.write("data", 36, "ascii");
  header.writeUInt32LE(data.length, 40);
  fs.writeFileSync(path, Buffer.concat([header, data]));
}

export function resampleLinear(samples: Float64Array, fromRate: number, toRate: number): Float64Array {
  if (fromRate === toRate) return samples;
  const outLength = Math.max(1, Math.round((samples.length * toRate) / fromRate));
  const out = new Float64Array(outLength);
  const step = fromRate / toRate;
  for (let i = 0; i < outLength; i++) {
    const pos = i * step;
    const lo = Math.floor(pos);
    const hi = Math.min(lo + 1, samples.length - 1);
    const frac = pos - lo;
    out[i] = samples[Math.min(lo, samples.length - 1)] * (1 - frac) + samples[hi] * frac;
  }
  return out;
}

export interface PreparedClip {
  samples: Float32Array; // exactly CLIP_SECONDS * TARGET_SAMPLE_RATE mono samples
  padded: boolean;
  truncated: boolean;
}

export function prepareClip(clip: AudioClip): PreparedClip {
  const resampled = resampleLinear(clip.samples, clip.sampleRate, TARGET_SAMPLE_RATE);
  const want = CLIP_SECONDS * TARGET_SAMPLE_RATE;
  const out = new Float32Array(want);
  const n = Math.min(want, resampled.length);
  for (let i = 0; i < n; i++) out[i] = Math.fround(resampled[i]);
  return { samples: out, padded: resampled.length < want, truncated: resampled.length > want };
}
