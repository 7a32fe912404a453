import { TEXT_DIM } from './embfile.js';

export interface TextEmbedding {
  vector: number[];
  modelId: string;
  sentenceCount: number;
}

/** Arithmetic mean of sentence vectors; empty input gives the zero vector. */
export function meanPool(vectors: number[][], modelId: string): TextEmbedding {
  if (vectors.length === 0) {
    return { vector: new Array<number>(TEXT_DIM).fill(0), modelId, sentenceCount: 0 };
  }
  const dim = vectors[0].length;
  const mean = new Array<number>(dim).fill(0);
  for (const vec of vectors) {
    if (vec.length !== dim) throw new Error('inconsistent vector lengths in mean pool');
    for (let i = 0; i < dim; i++) mean[i] += vec[i];
  }
  for (let i = 0; i < dim; i++) mean[i] /= vectors.length;
  return { vector: mean, modelId, sentenceCount: vectors.length };
}

export function cosine(a: number[], b: number[]): number {
  let dot = 0;
  let na = 0;
  let nb = 0;
  for (let i = 0; i < a.length; i++) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const denom = Math.sqrt(na) * Math.sqrt(nb);
  return denom > 0 ? dot / denom : 0;
}
