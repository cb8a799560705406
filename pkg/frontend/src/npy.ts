/**
 * Minimal .npy (version 1.x) parser for little-endian float arrays,
 * enough to consume the spectrogram and target dumps of the native CLI.
 */

export interface NpyArray {
  data: Float64Array;
  shape: number[];
}

export function parseNpy(buffer: Buffer): NpyArray {
  if (buffer.length < 10 || buffer.toString("latin1", 0, 6) !== "\x93NUMPY") {
    throw new Error("not an npy file");
  }
  const major = buffer.readUInt8(6);
  if (major !== 1) {
    throw new Error(`unsupported npy version ${major}`);
  }
  const headerLen = buffer.readUInt16LE(8);
  const header = buffer.toString("latin1", 10, 10 + headerLen);

  const descrMatch = header.match(/'descr':\s*'([^']+)'/);
  const fortranMatch = header.match(/'fortran_order':\s*(True|False)/);
  const shapeMatch = header.match(/'shape':\s*\(([^)]*)\)/);
  if (!descrMatch || !fortranMatch || !shapeMatch) {
    throw new Error(`malformed npy header: ${header}`);
  }
  if (fortranMatch[1] !== "False") {
    throw new Error("fortran-ordered npy arrays are not supported");
  }
  const descr = descrMatch[1];
  const shape = shapeMatch[1]
    .split(",")
    .map((part) => part.trim())
    .filter((part) => part.length > 0)
    .map((part) => parseInt(part, 10));
  const count = shape.reduce((a, b) => a * b, 1);

  const payload = buffer.subarray(10 + headerLen);
  // Copy into a fresh buffer so the typed-array view is aligned.
  const aligned = new ArrayBuffer(payload.length);
  new Uint8Array(aligned).set(payload);

  let data: Float64Array;
  if (descr === "<f8") {
    data = new Float64Array(aligned, 0, count);
  } else if (descr === "<f4") {
    data = Float64Array.from(new Float32Array(aligned, 0, count));
  } else {
    throw new Error(`unsupported npy dtype ${descr}`);
  }
  return { data, shape };
}

/** Raw data-section bytes, e.g. for hashing against native digests. */
export function npyPayload(buffer: Buffer): Buffer {
  if (buffer.toString("latin1", 0, 6) !== "\x93NUMPY") {
    throw new Error("not an npy file");
  }
  const headerLen = buffer.readUInt16LE(8);
  return buffer.subarray(10 + headerLen);
}
