#!/usr/bin/env node
// export-embeddings --transcripts DIR --outdir DIR [--model-id STR]
//
// Reads every transcript under --transcripts (flat files or participant
// subfolders), reduces each to patient sentences, encodes and mean-pools
// them, and writes <id>.emb.f32le files the training pipeline can ingest.
import { readdirSync, readFileSync, statSync } from 'node:fs';
import { basename, join } from 'node:path';

import { DEFAULT_MODEL_ID, embedSentences, loadEncoder } from './encoder.js';
import { writeEmbeddingFile } from './embfile.js';
import { meanPool } from './pool.js';
import { transcriptSentences } from './segment.js';

export interface ExporterArgs {
  transcripts: string;
  outdir: string;
  modelId: string;
}

export function parseArgs(argv: string[]): ExporterArgs {
  const args: Partial<ExporterArgs> = { modelId: DEFAULT_MODEL_ID };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (flag === '--transcripts') { args.transcripts = value; i++; }
    else if (flag === '--outdir') { args.outdir = value; i++; }
    else if (flag === '--model-id') { args.modelId = value; i++; }
    else throw new Error(`unknown flag: ${flag}`);
  }
  if (!args.transcripts || !args.outdir) {
    throw new Error('usage: export-embeddings --transcripts DIR --outdir DIR [--model-id STR]');
  }
  return args as ExporterArgs;
}

export function participantId(path: string): string {
  const stem = basename(path).replace(/\.(csv|tsv|txt)$/i, '');
  const underscore = stem.indexOf('_');
  return underscore > 0 ? stem.slice(0, underscore) : stem;
}

export function findTranscripts(root: string): { id: string; path: string }[] {
  const found: { id: string; path: string }[] = [];
  for (const entry of readdirSync(root).sort()) {
    const path = join(root, entry);
    const stats = statSync(path);
    if (stats.isDirectory()) {
      for (const inner of readdirSync(path).sort()) {
        if (/transcript/i.test(inner)) {
          found.push({ id: participantId(inner), path: join(path, inner) });
        }
      }
    } else if (/\.(csv|tsv|txt)$/i.test(entry)) {
      found.push({ id: participantId(entry), path });
    }
  }
  return found;
}

export async function exportEmbeddings(args: ExporterArgs): Promise<string[]> {
  const encoder = loadEncoder(args.modelId);
  const transcripts = findTranscripts(args.transcripts);
  if (transcripts.length === 0) {
    throw new Error(`no transcripts found under ${args.transcripts}`);
  }
  const written: string[] = [];
  for (const { id, path } of transcripts) {
    const sentences = transcriptSentences(readFileSync(path, 'utf-8'));
    const vectors = await embedSentences(sentences, encoder);
    const pooled = meanPool(vectors, encoder.modelId);
    written.push(writeEmbeddingFile(id, pooled.vector, args.outdir));
    console.log(`${id}: ${pooled.sentenceCount} sentences -> ${written[written.length - 1]}`);
  }
  return written;
}

const isDirectRun = process.argv[1] !== undefined
  && import.meta.url === `file://${process.argv[1]}`;

if (isDirectRun) {
  (async () => {
    try {
      const args = parseArgs(process.argv.slice(2));
      const written = await exportEmbeddings(args);
      console.log(`wrote ${written.length} embedding files`);
    } catch (err) {
      console.error(`export failed: ${(err as Error).message}`);
      process.exit(1);
    }
  })();
}
