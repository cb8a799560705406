/**
 * Seed-replay through the native CLI.
 *
 * Spectrogram replay is floating-point DSP whose bit-exactness must have
 * exactly one source of truth, so these bindings never reimplement it:
 * they invoke the `ced replay` subcommand and parse the .npy dumps it
 * writes. Batch a list of slots into one invocation when replaying many.
 */

import { spawnSync } from "node:child_process";
import { createHash } from "node:crypto";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { NpyArray, npyPayload, parseNpy } from "./npy";

export interface ReplayOptions {
  storePath: string;
  corpusDir: string;
  configPath?: string;
  /** Command used to reach the native CLI; defaults to `python3 -m ced.cli`. */
  command?: string[];
}

export interface ReplayedSlot {
  sampleId: number;
  epoch: number;
  spectrogram: NpyArray;
  /** sha256 of the spectrogram's raw float64 bytes, comparable against the
   * digests the native extractor records per slot. */
  spectrogramSha256: string;
  target: Float64Array;
  /** Record fields as dumped by the native side (value bits, indices, seed). */
  record: {
    seed: number;
    indices: number[];
    value_bits: number[];
    values: number[];
  };
}

function cliCommand(options: ReplayOptions): string[] {
  return options.command ?? [process.env.CED_PYTHON ?? "python3", "-m", "ced.cli"];
}

/** Replay many (sample, epoch) slots with a single native invocation. */
export function replayMany(
  slots: Array<[number, number]>,
  options: ReplayOptions
): ReplayedSlot[] {
  const workdir = fs.mkdtempSync(path.join(os.tmpdir(), "ced-replay-"));
  try {
    const slotsFile = path.join(workdir, "slots.txt");
    fs.writeFileSync(slotsFile, slots.map(([s, e]) => `${s} ${e}`).join("\n") + "\n");
    const outDir = path.join(workdir, "out");
    const [command, ...prefix] = cliCommand(options);
    const args = [
      ...prefix,
      "replay",
      "--store",
      options.storePath,
      "--corpus",
      options.corpusDir,
      "--slots",
      slotsFile,
      "--out-dir",
      outDir,
    ];
    if (options.configPath) {
      args.push("--config", options.configPath);
    }
    const proc = spawnSync(command, args, { maxBuffer: 1 << 26 });
    if (proc.status !== 0) {
      throw new Error(
        `native replay failed (exit ${proc.status}): ${proc.stderr?.toString() ?? ""}`
      );
    }
    return slots.map(([sampleId, epoch]) => readSlot(outDir, sampleId, epoch));
  } finally {
    fs.rmSync(workdir, { recursive: true, force: true });
  }
}

export function replay(
  sampleId: number,
  epoch: number,
  options: ReplayOptions
): ReplayedSlot {
  return replayMany([[sampleId, epoch]], options)[0];
}

function readSlot(outDir: string, sampleId: number, epoch: number): ReplayedSlot {
  const stem = `${String(sampleId).padStart(6, "0")}_${String(epoch).padStart(4, "0")}`;
  const specBytes = fs.readFileSync(path.join(outDir, `spec_${stem}.npy`));
  const spectrogram = parseNpy(specBytes);
  const spectrogramSha256 = createHash("sha256").update(npyPayload(specBytes)).digest("hex");
  const target = parseNpy(fs.readFileSync(path.join(outDir, `target_${stem}.npy`))).data;
  const record = JSON.parse(fs.readFileSync(path.join(outDir, `record_${stem}.json`), "utf-8"));
  return { sampleId, epoch, spectrogram, spectrogramSha256, target, record };
}
