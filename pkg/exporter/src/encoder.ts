// Sentence encoders producing 768-D vectors.
//
// "hash-768-v1" is a dependency-free deterministic lexical encoder
// (feature-hashed unigrams + bigrams, L2 normalized); any other model id
// is loaded through transformers.js when that package is installed.
import { TEXT_DIM } from './embfile.js';

export const HASH_MODEL_ID = 'hash-768-v1';
export const DEFAULT_MODEL_ID = 'sentence-transformers/all-mpnet-base-v2';

export interface SentenceEncoder {
  modelId: string;
  encode(sentences: string[]): Promise<number[][]>;
}

function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

export function hashEncode(sentence: string, dim = TEXT_DIM): number[] {
  const vec = new Array<number>(dim).fill(0);
  const tokens = sentence.toLowerCase().split(/\s+/).filter((t) => t.length > 0);
  const features: string[] = [...tokens];
  for (let i = 0; i + 1 < tokens.length; i++) {
    features.push(`${tokens[i]} ${tokens[i + 1]}`);
  }
  for (const feature of features) {
    const h = fnv1a(feature);
    const sign = (fnv1a(`s#${feature}`) & 1) === 0 ? 1 : -1;
    vec[h % dim] += sign;
  }
  const norm = Math.sqrt(vec.reduce((acc, v) => acc + v * v, 0));
  return norm > 0 ? vec.map((v) => v / norm) : vec;
}

class HashEncoder implements SentenceEncoder {
  modelId = HASH_MODEL_ID;

  async encode(sentences: string[]): Promise<number[][]> {
    return sentences.map((s) => hashEncode(s));
  }
}

class TransformerEncoder implements SentenceEncoder {
  private pipe: any = null;

  constructor(public modelId: string) {}

  private async init() {
    if (this.pipe) return;
    let mod: any;
    // Optional dependency: resolve by name at runtime only.
    const specifier = '@xenova/transformers';
    try {
      mod = await import(specifier);
    } catch {
      throw new Error(
        `model "${this.modelId}" needs the optional @xenova/transformers package ` +
        `(npm install @xenova/transformers), or use --model-id ${HASH_MODEL_ID}`,
      );
    }
    this.pipe = await mod.pipeline('feature-extraction', this.modelId);
  }

  async encode(sentences: string[]): Promise<number[][]> {
    await this.init();
    const out: number[][] = [];
    for (const s of sentences) {
      const tensor = await this.pipe(s, { pooling: 'mean', normalize: false });
      const vec = Array.from(tensor.data as Float32Array).map(Number);
      if (vec.length !== TEXT_DIM) {
        throw new Error(`model ${this.modelId} returned ${vec.length}-D vectors, need ${TEXT_DIM}`);
      }
      out.push(vec);
    }
    return out;
  }
}

export function loadEncoder(modelId: string = DEFAULT_MODEL_ID): SentenceEncoder {
  if (modelId === HASH_MODEL_ID || modelId.startsWith('hash-')) {
    return new HashEncoder();
  }
  return new TransformerEncoder(modelId);
}

/** Encode non-empty sentences; empty strings are skipped. */
export async function embedSentences(
  sentences: string[],
  encoder: SentenceEncoder,
): Promise<number[][]> {
  const kept = sentences.filter((s) => s.trim().length > 0);
  if (kept.length === 0) return [];
  return encoder.encode(kept);
}
