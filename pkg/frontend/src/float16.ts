/**
 * IEEE 754 binary16 decoding.
 *
 * Every binary16 value is exactly representable as a double, so the
 * conversion below is exact and matches any conforming implementation
 * bit for bit.
 */

export function float16ToNumber(bits: number): number {
  const sign = bits & 0x8000 ? -1 : 1;
  const exponent = (bits >> 10) & 0x1f;
  const fraction = bits & 0x3ff;
  if (exponent === 0) {
    return sign * fraction * 2 ** -24; // subnormal (or signed zero)
  }
  if (exponent === 31) {
    return fraction !== 0 ? NaN : sign * Infinity;
  }
  return sign * (1 + fraction / 1024) * 2 ** (exponent - 15);
}

export function decodeFloat16Array(bits: Uint16Array): Float64Array {
  const out = new Float64Array(bits.length);
  for (let i = 0; i < bits.length; i++) {
    out[i] = float16ToNumber(bits[i]);
  }
  return out;
}
