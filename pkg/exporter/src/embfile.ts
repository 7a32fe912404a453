// Binary embedding file format shared with the training pipeline:
// 8-byte magic "SEVFEMB1", uint32 little-endian dimension, then that many
// little-endian float32 values.
import { mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

export const MAGIC = 'SEVFEMB1';
export const TEXT_DIM = 768;

export function encodeEmbedding(vector: number[]): Buffer {
  const buf = Buffer.alloc(MAGIC.length + 4 + 4 * vector.length);
  buf.write(MAGIC, 0, 'ascii');
  buf.writeUInt32LE(vector.length, MAGIC.length);
  for (let i = 0; i < vector.length; i++) {
    buf.writeFloatLE(vector[i], MAGIC.length + 4 + 4 * i);
  }
  return buf;
}

export function writeEmbeddingFile(id: string, vector: number[], outdir: string): string {
  mkdirSync(outdir, { recursive: true });
  const path = join(outdir, `${id}.emb.f32le`);
  writeFileSync(path, encodeEmbedding(vector));
  return path;
}

export function readEmbeddingFile(path: string): number[] {
  const buf = readFileSync(path);
  if (buf.length < MAGIC.length + 4 || buf.toString('ascii', 0, MAGIC.length) !== MAGIC) {
    throw new Error(`bad magic in ${path}`);
  }
  const dim = buf.readUInt32LE(MAGIC.length);
  if (buf.length !== MAGIC.length + 4 + 4 * dim) {
    throw new Error(`size mismatch in ${path}: dim=${dim}, got ${buf.length} bytes`);
  }
  const out = new Array<number>(dim);
  for (let i = 0; i < dim; i++) {
    out[i] = buf.readFloatLE(MAGIC.length + 4 + 4 * i);
  }
  return out;
}
