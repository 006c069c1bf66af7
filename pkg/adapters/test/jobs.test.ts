import { createHash } from "node:crypto";
import { existsSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

import { generateGolden } from "../src/golden.js";
import { loadModelLock, runBatch, sceneManifestEntry, writeSceneManifest } from "../src/jobs.js";
import { writePpm, writeWavPcm16 } from "../src/media.js";
import { readNpy } from "../src/npy.js";

const ROOT = path.join(__dirname, "..");
const LOCK = path.join(ROOT, "models.lock.json");
const GOLDEN_DIR = path.join(ROOT, "golden");

describe("extraction jobs", () => {
  it("runs a batch in order and flags padded clips", () => {
    const d = mkdtempSync(path.join(tmpdir(), "jobs-"));
    writePpm(path.join(d, "img.ppm"), {
      width: 16,
      height: 16,
      pixels: new Uint8Array(16 * 16 * 3).fill(60),
    });
    writeWavPcm16(path.join(d, "short.wav"), { sampleRate: 8000, samples: new Float64Array(4000) });
    const lock = loadModelLock(LOCK);
    const results = runBatch([
      { kind: "patch_grid", input: path.join(d, "img.ppm"), output: path.join(d, "img.npy"), modelId: lock.patch_grid },
      { kind: "audio_embedding", input: path.join(d, "short.wav"), output: path.join(d, "a.npy"), modelId: lock.audio_embedding },
      { kind: "class_probs", input: path.join(d, "short.wav"), output: path.join(d, "p.npy"), modelId: lock.class_probs },
      { kind: "text_embedding", input: "city traffic at dusk", output: path.join(d, "t.npy"), modelId: lock.text_embedding },
    ]);
    expect(results.map((r) => r.kind)).toEqual(["patch_grid", "audio_embedding", "class_probs", "text_embedding"]);
    expect(results[0].shape).toEqual([1, 1, 1024]);
    expect(results[1].padded).toBe(true);
    expect(results[2].padded).toBe(true);
    for (const r of results) {
      expect(existsSync(r.output)).toBe(true);
      expect(readNpy(r.output).shape).toEqual(r.shape);
    }
  });

  it("builds scene manifest entries in the shared schema", () => {
    const entry = sceneManifestEntry({
      sceneId: "s1",
      patchEmbeddingPath: "s1_patches.npy",
      audioEmbeddingPaths: ["a0.npy", "a1.npy"],
      textHypotheses: ["a caption"],
    });
    expect(Object.keys(entry).sort()).toEqual([
      "audio_embedding_paths",
      "image_path",
      "patch_embedding_path",
      "scene_id",
      "text_hypotheses",
    ]);
    const d = mkdtempSync(path.join(tmpdir(), "manifest-"));
    writeSceneManifest(path.join(d, "m.json"), [{ sceneId: "a" }, { sceneId: "b" }]);
    expect(() => writeSceneManifest(path.join(d, "dup.json"), [{ sceneId: "a" }, { sceneId: "a" }])).toThrow(/duplicate/);
  });
});

describe("golden fixtures", () => {
  it("regeneration reproduces the checked-in files byte for byte", () => {
    const d = mkdtempSync(path.join(tmpdir(), "golden-"));
    generateGolden(d, LOCK);
    const index = JSON.parse(readFileSync(path.join(GOLDEN_DIR, "index.json"), "utf-8"));
    expect(index.files.length).toBeGreaterThanOrEqual(8);
    for (const f of index.files) {
      const fresh = readFileSync(path.join(d, f.file));
      const checked = readFileSync(path.join(GOLDEN_DIR, f.file));
      expect(fresh.equals(checked), f.file).toBe(true);
      expect(createHash("sha256").update(checked).digest("hex")).toBe(f.sha256);
    }
    expect(readFileSync(path.join(d, "index.json"), "utf-8")).toBe(
      readFileSync(path.join(GOLDEN_DIR, "index.json"), "utf-8"),
    );
  });

  it("golden class probabilities match their stored leading values", () => {
    const index = JSON.parse(readFileSync(path.join(GOLDEN_DIR, "index.json"), "utf-8"));
    for (const f of index.files) {
      const tensor = readNpy(path.join(GOLDEN_DIR, f.file));
      expect(Array.from(tensor.data.subarray(0, 8))).toEqual(f.first8);
      if (f.kind === "class_probs") {
        let sum = 0;
        for (const v of tensor.data) sum += v;
        expect(Math.abs(sum - 1)).toBeLessThan(1e-4);
      }
    }
  });
});
