/** Decoding of the workbench's binary matrix payloads.
 *
 * Layout: 4 magic bytes ("EMB1" embeddings, "PRJ1" projections), uint64 LE
 * row count, uint64 LE column count, float64 LE row-major data.  The UI
 * never transforms these values; it only renders them.
 */

export interface Matrix {
  n: number;
  d: number;
  data: Float64Array;
}

export const EMBEDDINGS_MAGIC = "EMB1";
export const PROJECTION_MAGIC = "PRJ1";

export function decodeMatrix(buffer: ArrayBuffer, expectedMagic: string): Matrix {
  if (buffer.byteLength < 20) {
    throw new Error(`matrix payload too short (${buffer.byteLength} bytes)`);
  }
  const magic = new TextDecoder().decode(new Uint8Array(buffer, 0, 4));
  if (magic !== expectedMagic) {
    throw new Error(`bad magic ${JSON.stringify(magic)}, expected ${expectedMagic}`);
  }
  const view = new DataView(buffer);
  const n = Number(view.getBigUint64(4, true));
  const d = Number(view.getBigUint64(12, true));
  const expected = 20 + n * d * 8;
  if (buffer.byteLength !== expected) {
    throw new Error(`matrix payload is ${buffer.byteLength} bytes, expected ${expected}`);
  }
  // row-major float64 LE; platforms we target are little-endian, but copy
  // via DataView to stay correct regardless
  const data = new Float64Array(n * d);
  for (let i = 0; i < n * d; i++) {
    data[i] = view.getFloat64(20 + i * 8, true);
  }
  return { n, d, data };
}

export function matrixColumn(m: Matrix, column: number): Float64Array {
  const out = new Float64Array(m.n);
  for (let i = 0; i < m.n; i++) out[i] = m.data[i * m.d + column];
  return out;
}

/** Hex SHA-256 of a payload, for display against the manifest checksum. */
export async function sha256Hex(buffer: ArrayBuffer): Promise<string> {
  const digest = await crypto.subtle.digest("SHA-256", buffer);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}
