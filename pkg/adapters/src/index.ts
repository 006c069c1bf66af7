export { readNpy, writeNpy, Tensor } from "./npy.js";
export {
  AudioClip,
  PreparedClip,
  RgbImage,
  CLIP_SECONDS,
  TARGET_SAMPLE_RATE,
  prepareClip,
  readPpm,
  readWav,
  resampleLinear,
  writePpm,
  writeWavPcm16,
} from "./media.js";
export {
  AUDIO_EMBED_DIM,
  AUDIOSET_CLASSES,
  PATCH_EMBED_DIM,
  PATCH_SIZE,
  TEXT_EMBED_DIM,
  HashStream,
  encodeAudioEmbedding,
  encodeClassProbs,
  encodePatchGrid,
  encodeTextEmbedding,
} from "./encoders.js";
export {
  ExtractionJob,
  JobKind,
  JobResult,
  SceneFiles,
  loadModelLock,
  runBatch,
  runJob,
  sceneManifestEntry,
  writeReport,
  writeSceneManifest,
} from "./jobs.js";
export { generateGolden } from "./golden.js";
