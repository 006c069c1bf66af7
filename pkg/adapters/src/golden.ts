/**
 * Golden fixture set: three deterministic clips plus an image and a
 * caption, extracted into tensor files with a SHA-256 index. The fixtures
 * are checked in; regenerating them must be a no-op, and the pipeline's
 * acceptance suite re-reads the same files bit-exactly on the Python side.
 */

import { createHash } from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";

import { loadModelLock, runJob, JobResult, ExtractionJob } from "./jobs.js";
import { AudioClip, RgbImage, writePpm, writeWavPcm16 } from "./media.js";
import { readNpy } from "./npy.js";

function sineClip(freq: number, seconds: number, rate: number, amplitude = 0.5): AudioClip {
  const n = Math.round(seconds * rate);
  const samples = new Float64Array(n);
  for (let i = 0; i < n; i++) samples[i] = amplitude * Math.sin((2 * Math.PI * freq * i) / rate);
  return { sampleRate: rate, samples };
}

function lcgNoiseClip(seconds: number, rate: number, seed: number): AudioClip {
  const n = Math.round(seconds * rate);
  const samples = new Float64Array(n);
  let state = seed >>> 0;
  for (let i = 0; i < n; i++) {
    state = (Math.imul(state, 1664525) + 1013904223) >>> 0;
    samples[i] = (state / 0xffffffff) * 0.8 - 0.4;
  }
  return { sampleRate: rate, samples };
}

function silentClip(seconds: number, rate: number): AudioClip {
  return { sampleRate: rate, samples: new Float64Array(Math.round(seconds * rate)) };
}

function stripedImage(size: number): RgbImage {
  const pixels = new Uint8Array(size * size * 3);
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const at = (y * size + x) * 3;
      const band = Math.floor((x / size) * 4);
      const palette = [
        [45, 140, 55],
        [25, 45, 120],
        [118, 115, 112],
        [255, 160, 20],
      ][band];
      pixels[at] = palette[0];
      pixels[at + 1] = palette[1];
      pixels[at + 2] = (palette[2] + y) % 256;
    }
  }
  return { width: size, height: size, pixels };
}

const GOLDEN_CAPTION = "a four-band test strip over water and a sunlit road";

export function generateGolden(outDir: string, lockPath: string): JobResult[] {
  fs.mkdirSync(path.join(outDir, "media"), { recursive: true });
  const lock = loadModelLock(lockPath);
  writeWavPcm16(path.join(outDir, "media", "clip_tone.wav"), sineClip(440, 0.5, 8000));
  writeWavPcm16(path.join(outDir, "media", "clip_noise.wav"), lcgNoiseClip(1.0, 22050, 20240801));
  writeWavPcm16(path.join(outDir, "media", "clip_silence.wav"), silentClip(0.8, 16000));
  writePpm(path.join(outDir, "media", "scene.ppm"), stripedImage(32));

  const jobs: ExtractionJob[] = [
    { kind: "patch_grid", input: path.join(outDir, "media", "scene.ppm"), output: path.join(outDir, "scene_patches.npy"), modelId: lock.patch_grid },
    { kind: "text_embedding", input: GOLDEN_CAPTION, output: path.join(outDir, "caption_text.npy"), modelId: lock.text_embedding },
  ];
  for (const clip of ["tone", "noise", "silence"]) {
    jobs.push({
      kind: "audio_embedding",
      input: path.join(outDir, "media", `clip_${clip}.wav`),
      output: path.join(outDir, `clip_${clip}_embedding.npy`),
      modelId: lock.audio_embedding,
    });
    jobs.push({
      kind: "class_probs",
      input: path.join(outDir, "media", `clip_${clip}.wav`),
      output: path.join(outDir, `clip_${clip}_probs.npy`),
      modelId: lock.class_probs,
    });
  }
  const results = jobs.map(runJob);

  const index = {
    schema_version: 1,
    caption: GOLDEN_CAPTION,
    files: results.map((r) => {
      const bytes = fs.readFileSync(r.output);
      const tensor = readNpy(r.output);
      return {
        file: path.basename(r.output),
        kind: r.kind,
        model_id: r.modelId,
        shape: r.shape,
        padded: r.padded,
        sha256: createHash("sha256").update(bytes).digest("hex"),
        first8: Array.from(tensor.data.subarray(0, 8)),
      };
    }),
  };
  fs.writeFileSync(path.join(outDir, "index.json"), JSON.stringify(index, null, 2) + "\n");
  return results;
}
