export { DEFAULT_MODEL_ID, HASH_MODEL_ID, embedSentences, hashEncode, loadEncoder } from './encoder.js';
export type { SentenceEncoder } from './encoder.js';
export { MAGIC, TEXT_DIM, encodeEmbedding, readEmbeddingFile, writeEmbeddingFile } from './embfile.js';
export { cosine, meanPool } from './pool.js';
export type { TextEmbedding } from './pool.js';
export { normalizeText, patientTurns, transcriptSentences } from './segment.js';
export { exportEmbeddings, findTranscripts, parseArgs, participantId } from './cli.js';
