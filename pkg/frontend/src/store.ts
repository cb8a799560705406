/**
 * Read-only view of a ced logit store.
 *
 * The on-disk format is a fixed little-endian layout (24-byte header,
 * then epoch-major records of 4*topK + 4 bytes), specified so that
 * readers in any language can parse it directly. This module is such a
 * reader; nothing here ever mutates the store.
 */

import * as fs from "node:fs";

import { decodeFloat16Array } from "./float16";

export const MAGIC = "CEDS";
export const FORMAT_VERSION = 1;
export const HEADER_SIZE = 24;

export interface StoreHeader {
  version: number;
  numSamples: number;
  numClasses: number;
  topK: number;
  storedEpochs: number;
}

export interface StoredRecord {
  sampleId: number;
  epoch: number;
  /** Raw binary16 bit patterns of the probabilities, for exact comparison. */
  valueBits: Uint16Array;
  /** Probabilities decoded to doubles (exact, binary16 is a subset). */
  values: Float64Array;
  indices: Uint16Array;
  seed: number;
}

export class StoreFormatError extends Error {}
export class MissingRecordError extends Error {}

export class StoreView {
  readonly header: StoreHeader;
  readonly path: string;
  private readonly data: Buffer;
  private readonly bitmap: Buffer | null;

  constructor(path: string) {
    this.path = path;
    this.data = fs.readFileSync(path);
    if (this.data.length < HEADER_SIZE) {
      throw new StoreFormatError(`store file shorter than the header: ${path}`);
    }
    if (this.data.toString("latin1", 0, 4) !== MAGIC) {
      throw new StoreFormatError(`bad magic in ${path}`);
    }
    const version = this.data.readUInt16LE(4);
    if (version !== FORMAT_VERSION) {
      throw new StoreFormatError(`unsupported format version ${version}`);
    }
    const numSamples = Number(this.data.readBigUInt64LE(8));
    const numClasses = this.data.readUInt32LE(16);
    const topK = this.data.readUInt16LE(20);
    const storedEpochs = this.data.readUInt16LE(22);
    this.header = { version, numSamples, numClasses, topK, storedEpochs };

    const expected = HEADER_SIZE + numSamples * storedEpochs * this.recordSize;
    if (this.data.length !== expected) {
      throw new StoreFormatError(
        `corrupt store: file is ${this.data.length} bytes, header implies ${expected}`
      );
    }
    const bitmapPath = `${path}.written`;
    this.bitmap = fs.existsSync(bitmapPath) ? fs.readFileSync(bitmapPath) : null;
  }

  get recordSize(): number {
    return 4 * this.header.topK + 4;
  }

  isWritten(sampleId: number, epoch: number): boolean {
    const slot = this.slot(sampleId, epoch);
    if (this.bitmap !== null) {
      return ((this.bitmap[slot >> 3] >> (slot & 7)) & 1) === 1;
    }
    const start = HEADER_SIZE + slot * this.recordSize;
    return this.data.subarray(start, start + this.recordSize).some((b) => b !== 0);
  }

  readRecord(sampleId: number, epoch: number): StoredRecord {
    const slot = this.slot(sampleId, epoch);
    if (!this.isWritten(sampleId, epoch)) {
      throw new MissingRecordError(`record (sample ${sampleId}, epoch ${epoch}) was never written`);
    }
    const k = this.header.topK;
    const start = HEADER_SIZE + slot * this.recordSize;
    const valueBits = new Uint16Array(k);
    const indices = new Uint16Array(k);
    for (let i = 0; i < k; i++) {
      valueBits[i] = this.data.readUInt16LE(start + 2 * i);
      indices[i] = this.data.readUInt16LE(start + 2 * k + 2 * i);
    }
    const seed = this.data.readUInt32LE(start + 4 * k);
    return { sampleId, epoch, valueBits, values: decodeFloat16Array(valueBits), indices, seed };
  }

  /** Dense training target: record values scattered into a zero vector. */
  denseTarget(record: StoredRecord): Float64Array {
    const target = new Float64Array(this.header.numClasses);
    for (let i = 0; i < record.indices.length; i++) {
      target[record.indices[i]] = record.values[i];
    }
    return target;
  }

  /** All records of one stored epoch in sample order. */
  *epochRecords(epoch: number): Generator<StoredRecord> {
    for (let sampleId = 0; sampleId < this.header.numSamples; sampleId++) {
      yield this.readRecord(sampleId, epoch);
    }
  }

  private slot(sampleId: number, epoch: number): number {
    if (sampleId < 0 || sampleId >= this.header.numSamples) {
      throw new StoreFormatError(`sample_id ${sampleId} out of range [0, ${this.header.numSamples})`);
    }
    if (epoch < 0 || epoch >= this.header.storedEpochs) {
      throw new StoreFormatError(`epoch ${epoch} out of range [0, ${this.header.storedEpochs})`);
    }
    return epoch * this.header.numSamples + sampleId;
  }
}

export function openStore(path: string): StoreView {
  return new StoreView(path);
}
