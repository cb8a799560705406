import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as path from "node:path";

export const PYTHON = process.env.CED_PYTHON ?? "python3";

/** Deterministic 32-bit PRNG so fixtures are stable across runs. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function writeWav(filePath: string, samples: Float64Array, rate: number): void {
  const n = samples.length;
  const buffer = Buffer.alloc(44 + 2 * n);
  buffer.write("RIFF", 0, "latin1");
  buffer.writeUInt32LE(36 + 2 * n, 4);
  buffer.write("WAVE", 8, "latin1");
  buffer.write("fmt ", 12, "latin1");
  buffer.writeUInt32LE(16, 16); // PCM fmt chunk size
  buffer.writeUInt16LE(1, 20); // PCM
  buffer.writeUInt16LE(1, 22); // mono
  buffer.writeUInt32LE(rate, 24);
  buffer.writeUInt32LE(rate * 2, 28); // byte rate
  buffer.writeUInt16LE(2, 32); // block align
  buffer.writeUInt16LE(16, 34); // bits per sample
  buffer.write("data", 36, "latin1");
  buffer.writeUInt32LE(2 * n, 40);
  for (let i = 0; i < n; i++) {
    const clamped = Math.max(-1, Math.min(1, samples[i]));
    buffer.writeInt16LE(Math.max(-32768, Math.min(32767, Math.round(clamped * 32767))), 44 + 2 * i);
  }
  fs.writeFileSync(filePath, buffer);
}

/** Noisy-tone corpus; enough spectral structure for masks and shifts to matter. */
export function makeCorpus(dir: string, count: number, seconds = 0.2, rate = 16000): void {
  fs.mkdirSync(dir, { recursive: true });
  const rand = mulberry32(1234);
  const n = Math.round(seconds * rate);
  for (let i = 0; i < count; i++) {
    const freq = 200 + 5800 * rand();
    const phase = 2 * Math.PI * rand();
    const samples = new Float64Array(n);
    for (let t = 0; t < n; t++) {
      samples[t] = 0.4 * Math.sin((2 * Math.PI * freq * t) / rate + phase) + 0.04 * (rand() - 0.5);
    }
    writeWav(path.join(dir, `clip_${String(i).padStart(5, "0")}.wav`), samples, rate);
  }
}

export function runCli(args: string[]): void {
  const proc = spawnSync(PYTHON, ["-m", "ced.cli", ...args], { maxBuffer: 1 << 26 });
  if (proc.status !== 0) {
    throw new Error(
      `ced ${args[0]} failed (exit ${proc.status}): ${proc.stderr?.toString() ?? ""}`
    );
  }
}
