/**
 * Encoder providers for the extraction jobs.
 *
 * Real deployments back these with pretrained models served elsewhere; the
 * bundled providers are deterministic stubs that derive every output value
 * from a SHA-256 stream over (model id, preprocessed content), so the
 * emitted tensors are stable across platforms and runs and the pipeline's
 * shape/format contracts can be exercised without model weights.
 */

import { createHash } from "node:crypto";

import { PreparedClip, RgbImage } from "./media.js";

export const PATCH_SIZE = 16;
export const PATCH_EMBED_DIM = 1024;
export const AUDIO_EMBED_DIM = 512;
export const TEXT_EMBED_DIM = 512;
export const AUDIOSET_CLASSES = 527;

/** Deterministic float stream in [-1, 1), 24-bit resolution (exact in float32). */
export class HashStream {
  private counter = 0;
  private pool: Buffer = Buffer.alloc(0);
  private poolOffset = 0;

  constructor(private readonly seedMaterial: Buffer) {}

  private refill(): void {
    const h = createHash("sha256");
    h.update(this.seedMaterial);
    const header = Buffer.alloc(4);
    header.writeUInt32LE(this.counter >>> 0, 0);
    h.update(header);
    this.counter += 1;
    this.pool = h.digest();
    this.poolOffset = 0;
  }

  nextUint32(): number {
    if (this.poolOffset + 4 > this.pool.length) this.refill();
    const v = this.pool.readUInt32LE(this.poolOffset);
    this.poolOffset += 4;
    return v;
  }

  nextFloat(): number {
    return ((this.nextUint32() >>> 8) / 0x1000000) * 2 - 1;
  }

  fill(out: Float32Array): Float32Array {
    for (let i = 0; i < out.length; i++) out[i] = Math.fround(this.nextFloat());
    return out;
  }
}

function seedFor(modelId: string, content: Buffer): Buffer {
  return Buffer.concat([Buffer.from(modelId, "utf-8"), Buffer.from([0]), content]);
}

export interface PatchGridResult {
  shape: [number, number, number];
  data: Float32Array;
}

/** Dense per-patch embeddings over non-overlapping PATCH_SIZE tiles. */
export function encodePatchGrid(image: RgbImage, modelId: string): PatchGridResult {
  if (image.width < PATCH_SIZE || image.height < PATCH_SIZE) {
    throw new Error(`image ${image.width}x${image.height} smaller than one ${PATCH_SIZE}px patch`);
  }
  const gridH = Math.floor(image.height / PATCH_SIZE);
  const gridW = Math.floor(image.width / PATCH_SIZE);
  const data = new Float32Array(gridH * gridW * PATCH_EMBED_DIM);
  const patchBytes = Buffer.alloc(PATCH_SIZE * PATCH_SIZE * 3);
  for (let gy = 0; gy < gridH; gy++) {
    for (let gx = 0; gx < gridW; gx++) {
      let k = 0;
      for (let py = 0; py < PATCH_SIZE; py++) {
        const row = (gy * PATCH_SIZE + py) * image.width + gx * PATCH_SIZE;
        for (let px = 0; px < PATCH_SIZE; px++) {
          const at = (row + px) * 3;
          patchBytes[k++] = image.pixels[at];
          patchBytes[k++] = image.pixels[at + 1];
          patchBytes[k++] = image.pixels[at + 2];
        }
      }
      const stream = new HashStream(seedFor(modelId, patchBytes));
      const slice = data.subarray((gy * gridW + gx) * PATCH_EMBED_DIM, (gy * gridW + gx + 1) * PATCH_EMBED_DIM);
      stream.fill(slice);
    }
  }
  return { shape: [gridH, gridW, PATCH_EMBED_DIM], data };
}

export function encodeAudioEmbedding(clip: PreparedClip, modelId: string): Float32Array {
  const content = Buffer.from(clip.samples.buffer, clip.samples.byteOffset, clip.samples.byteLength);
  const stream = new HashStream(seedFor(modelId, content));
  return stream.fill(new Float32Array(AUDIO_EMBED_DIM));
}

export function encodeTextEmbedding(text: string, modelId: string): Float32Array {
  const stream = new HashStream(seedFor(modelId, Buffer.from(text.normalize("NFC"), "utf-8")));
  return stream.fill(new Float32Array(TEXT_EMBED_DIM));
}

/** Class probabilities over the tagger's label set; the row sums to 1. */
export function encodeClassProbs(clip: PreparedClip, modelId: string): Float32Array {
  const content = Buffer.from(clip.samples.buffer, clip.samples.byteOffset, clip.samples.byteLength);
  const stream = new HashStream(seedFor(modelId, content));
  const raw = new Float64Array(AUDIOSET_CLASSES);
  let total = 0;
  for (let i = 0; i < raw.length; i++) {
    raw[i] = (stream.nextFloat() + 1) / 2 + 1e-6;
    total += raw[i];
  }
  const out = new Float32Array(AUDIOSET_CLASSES);
  for (let i = 0; i < raw.length; i++) out[i] = Math.fround(raw[i] / total);
  return out;
}
