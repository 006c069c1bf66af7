import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import {
  CLIP_SECONDS,
  TARGET_SAMPLE_RATE,
  prepareClip,
  readPpm,
  readWav,
  resampleLinear,
  writePpm,
  writeWavPcm16,
} from "../src/media.js";

function tmpFile(name: string): string {
  return path.join(mkdtempSync(path.join(tmpdir(), "media-")), name);
}

describe("ppm", () => {
  it("round-trips an image", () => {
    const pixels = new Uint8Array(4 * 2 * 3);
    for (let i = 0; i < pixels.length; i++) pixels[i] = (i * 37) % 256;
    const p = tmpFile("img.ppm");
    writePpm(p, { width: 4, height: 2, pixels });
    const back = readPpm(p);
    expect(back.width).toBe(4);
    expect(back.height).toBe(2);
    expect(Array.from(back.pixels)).toEqual(Array.from(pixels));
  });
});

describe("wav", () => {
  it("round-trips PCM16 mono within quantization error", () => {
    const samples = new Float64Array(100);
    for (let i = 0; i < samples.length; i++) samples[i] = Math.sin(i / 7) * 0.9;
    const p = tmpFile("m.wav");
    writeWavPcm16(p, { sampleRate: 16000, samples });
    const back = readWav(p);
    expect(back.sampleRate).toBe(16000);
    expect(back.samples.length).toBe(100);
    // rounding plus the 32767-write / 32768-read scale difference
    for (let i = 0; i < 100; i++) {
      expect(Math.abs(back.samples[i] - samples[i])).toBeLessThan(1 / 16000);
    }
  });

  it("mixes stereo down to the channel mean", () => {
    // hand-built stereo PCM16: L = 0.5, R = -0.5 -> mono 0
    const frames = 10;
    const data = Buffer.alloc(frames * 4);
    for (let i = 0; i < frames; i++) {
      data.writeInt16LE(Math.round(0.5 * 32767), i * 4);
      data.writeInt16LE(Math.round(-0.5 * 32767), i * 4 + 2);
    }
    const header = Buffer.alloc(44);
    header.write("RIFF", 0, "ascii");
    header.writeUInt32LE(36 + data.length, 4);
    header.write("WAVE", 8, "ascii");
    header.write("fmt ", 12, "ascii");
    header.writeUInt32LE(16, 16);
    header.writeUInt16LE(1, 20);
    header.writeUInt16LE(2, 22); // stereo
    header.writeUInt32LE(8000, 24);
    header.writeUInt32LE(8000 * 4, 28);
    header.writeUInt16LE(4, 32);
    header.writeUInt16LE(16, 34);
    header.write("data", 36, "ascii");
    header.writeUInt32LE(data.length, 40);
    const p = tmpFile("s.wav");
    writeFileSync(p, Buffer.concat([header, data]));
    const clip = readWav(p);
    for (const v of clip.samples) expect(Math.abs(v)).toBeLessThan(1e-4);
  });
});

describe("resampling and clip preparation", () => {
  it("identity resample returns the input", () => {
    const s = new Float64Array([1, 2, 3]);
    expect(resampleLinear(s, 48000, 48000)).toBe(s);
  });

  it("doubling the rate interpolates midpoints", () => {
    const out = resampleLinear(new Float64Array([0, 1]), 1, 2);
    expect(out.length).toBe(4);
    expect(out[0]).toBeCloseTo(0, 12);
    expect(out[1]).toBeCloseTo(0.5, 12);
    expect(out[2]).toBeCloseTo(1, 12);
  });

  it("pads short clips to ten seconds and flags them", () => {
    const clip = prepareClip({ sampleRate: 8000, samples: new Float64Array(8000) }); // 1 s
    expect(clip.samples.length).toBe(CLIP_SECONDS * TARGET_SAMPLE_RATE);
    expect(clip.padded).toBe(true);
    expect(clip.truncated).toBe(false);
    // the padding region is silent
    expect(clip.samples[clip.samples.length - 1]).toBe(0);
  });

  it("does not flag exact-length clips", () => {
    const clip = prepareClip({
      sampleRate: TARGET_SAMPLE_RATE,
      samples: new Float64Array(CLIP_SECONDS * TARGET_SAMPLE_RATE),
    });
    expect(clip.padded).toBe(false);
    expect(clip.truncated).toBe(false);
  });

  it("truncates and flags clips longer than ten seconds", () => {
    const clip = prepareClip({
      sampleRate: TARGET_SAMPLE_RATE,
      samples: new Float64Array(CLIP_SECONDS * TARGET_SAMPLE_RATE + 5),
    });
    expect(clip.truncated).toBe(true);
  });
});
