/**
 * Extraction jobs: one media input -> one tensor file, plus a batch report
 * recording shapes, model ids and preprocessing flags. Scene manifests in
 * the pipeline's shared JSON schema can be assembled from completed jobs.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import {
  AUDIO_EMBED_DIM,
  AUDIOSET_CLASSES,
  TEXT_EMBED_DIM,
  encodeAudioEmbedding,
  encodeClassProbs,
  encodePatchGrid,
  encodeTextEmbedding,
} from "./encoders.js";
import { prepareClip, readPpm, readWav } from "./media.js";
import { writeNpy } from "./npy.js";

export type JobKind = "patch_grid" | "audio_embedding" | "text_embedding" | "class_probs";

export interface ExtractionJob {
  kind: JobKind;
  /** Media path for image/audio kinds; literal text for text_embedding. */
  input: string;
  output: string;
  modelId: string;
}

export interface JobResult {
  kind: JobKind;
  input: string;
  output: string;
  modelId: string;
  shape: number[];
  padded: boolean;
  truncated: boolean;
}

export function loadModelLock(lockPath: string): Record<JobKind, string> {
  return JSON.parse(fs.readFileSync(lockPath, "utf-8"));
}

export function runJob(job: ExtractionJob): JobResult {
  let shape: number[];
  let padded = false;
  let truncated = false;
  if (job.kind === "patch_grid") {
    const grid = encodePatchGrid(readPpm(job.input), job.modelId);
    writeNpy(job.output, { shape: grid.shape, data: grid.data });
    shape = grid.shape;
  } else if (job.kind === "audio_embedding" || job.kind === "class_probs") {
    const clip = prepareClip(readWav(job.input));
    padded = clip.padded;
    truncated = clip.truncated;
    const vec = job.kind === "audio_embedding"
      ? encodeAudioEmbedding(clip, job.modelId)
      : encodeClassProbs(clip, job.modelId);
    writeNpy(job.output, { shape: [vec.length], data: vec });
    shape = [job.kind === "audio_embedding" ? AUDIO_EMBED_DIM : AUDIOSET_CLASSES];
  } else if (job.kind === "text_embedding") {
    const vec = encodeTextEmbedding(job.input, job.modelId);
    writeNpy(job.output, { shape: [TEXT_EMBED_DIM], data: vec });
    shape = [TEXT_EMBED_DIM];
  } else {
    throw new Error(`unknown job kind ${(job as ExtractionJob).kind}`);
  }
  return { ...job, shape, padded, truncated };
}

export function runBatch(jobs: ExtractionJob[]): JobResult[] {
  return jobs.map(runJob); // input order is preserved in the report
}

export function writeReport(reportPath: string, results: JobResult[]): void {
  fs.mkdirSync(path.dirname(reportPath), { recursive: true });
  fs.writeFileSync(reportPath, JSON.stringify({ schema_version: 1, jobs: results }, null, 2) + "\n");
}

export interface SceneFiles {
  sceneId: string;
  imagePath?: string;
  patchEmbeddingPath?: string;
  audioEmbeddingPaths?: string[];
  textHypotheses?: string[];
  referenceAudioEmbeddingPath?: string;
}

/** Scene manifest entries in the schema the pipeline's loader validates. */
export function sceneManifestEntry(files: SceneFiles): Record<string, unknown> {
  const entry: Record<string, unknown> = {
    scene_id: files.sceneId,
    image_path: files.imagePath ?? "",
    patch_embedding_path: files.patchEmbeddingPath ?? "",
    audio_embedding_paths: files.audioEmbeddingPaths ?? [],
    text_hypotheses: files.textHypotheses ?? [],
  };
  if (files.referenceAudioEmbeddingPath) {
    entry.reference_audio_embedding_path = files.referenceAudioEmbeddingPath;
  }
  return entry;
}

export function writeSceneManifest(manifestPath: string, scenes: SceneFiles[]): void {
  const ids = new Set<string>();
  for (const s of scenes) {
    if (ids.has(s.sceneId)) throw new Error(`duplicate scene_id ${s.sceneId}`);
    ids.add(s.sceneId);
  }
  fs.writeFileSync(manifestPath, JSON.stringify(scenes.map(sceneManifestEntry), null, 2) + "\n");
}
