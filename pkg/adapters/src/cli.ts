#!/usr/bin/env node
/** Batch extraction CLI: single jobs, job files, and golden fixtures. */

import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import yargs from "yargs";
import type { Argv, ArgumentsCamelCase } from "yargs";
import { hideBin } from "yargs/helpers";

import { generateGolden } from "./golden.js";
import { ExtractionJob, JobKind, loadModelLock, runBatch, runJob, writeReport } from "./jobs.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const DEFAULT_LOCK = path.resolve(here, "..", "models.lock.json");

interface ExtractArgs {
  kind: JobKind;
  input: string;
  output: string;
  "model-id"?: string;
  lock: string;
}

interface BatchArgs {
  jobs: string;
  report: string;
  lock: string;
}

interface GoldenArgs {
  out: string;
  lock: string;
}

void yargs(hideBin(process.argv))
  .command(
    "extract",
    "run one extraction job",
    (y: Argv) =>
      y
        .option("kind", {
          choices: ["patch_grid", "audio_embedding", "text_embedding", "class_probs"] as const,
          demandOption: true,
        })
        .option("input", { type: "string", demandOption: true, describe: "media path (or literal text for text_embedding)" })
        .option("output", { type: "string", demandOption: true })
        .option("model-id", { type: "string", describe: "override the pinned model identifier" })
        .option("lock", { type: "string", default: DEFAULT_LOCK }),
    (argv: ArgumentsCamelCase<ExtractArgs>) => {
      const lock = loadModelLock(argv.lock);
      const job: ExtractionJob = {
        kind: argv.kind,
        input: argv.input,
        output: argv.output,
        modelId: argv["model-id"] ?? lock[argv.kind],
      };
      console.log(JSON.stringify(runJob(job), null, 2));
    },
  )
  .command(
    "batch",
    "run a JSON array of extraction jobs and write a report",
    (y: Argv) =>
      y
        .option("jobs", { type: "string", demandOption: true, describe: "JSON file: [{kind, input, output, modelId?}]" })
        .option("report", { type: "string", demandOption: true })
        .option("lock", { type: "string", default: DEFAULT_LOCK }),
    (argv: ArgumentsCamelCase<BatchArgs>) => {
      const lock = loadModelLock(argv.lock);
      const jobs = (JSON.parse(fs.readFileSync(argv.jobs, "utf-8")) as ExtractionJob[]).map((j) => ({
        ...j,
        modelId: j.modelId ?? lock[j.kind],
      }));
      const results = runBatch(jobs);
      writeReport(argv.report, results);
      console.log(JSON.stringify({ jobs: results.length, report: argv.report }, null, 2));
    },
  )
  .command(
    "golden",
    "regenerate the golden fixture set",
    (y: Argv) =>
      y.option("out", { type: "string", default: "golden" }).option("lock", { type: "string", default: DEFAULT_LOCK }),
    (argv: ArgumentsCamelCase<GoldenArgs>) => {
      const results = generateGolden(argv.out, argv.lock);
      console.log(JSON.stringify({ files: results.length, out: argv.out }, null, 2));
    },
  )
  .demandCommand(1)
  .strict()
  .help()
  .parse();
