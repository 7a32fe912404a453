// Transcript reduction to patient-only sentences.
//
// Turn-annotated layouts (tab or comma separated with a speaker column)
// keep only patient turns; layouts with a text column but no speaker
// column are treated as patient speech per row; anything else is plain
// patient text. Sentences split on sentence-final punctuation and
// newlines before normalization strips the punctuation away.

const PATIENT_SPEAKERS = ['participant', 'patient', 'subject'];

function sniffDelimiter(headerLine: string): string {
  for (const d of ['\t', ';', ',']) {
    if (headerLine.includes(d)) return d;
  }
  return ',';
}

function normHeader(name: string): string {
  return name.toLowerCase().replace(/[^a-z0-9]/g, '');
}

export function normalizeText(text: string): string {
  return text
    .toLowerCase()
    .replace(/<[^>]*>|\[[^\]]*\]/g, ' ')
    .replace(/[^a-z0-9\s]+/g, '')
    .replace(/\s+/g, ' ')
    .trim();
}

/** Patient-only turn texts, still carrying their original punctuation. */
export function patientTurns(raw: string): string[] {
  const lines = raw.split(/\r?\n/);
  if (lines.length === 0) return [];
  const delim = sniffDelimiter(lines[0]);
  const header = lines[0].split(delim).map(normHeader);
  const speakerCol = header.findIndex((h) => h === 'speaker');
  const textCol = header.findIndex((h) => ['value', 'text', 'utterance'].includes(h));

  if (textCol < 0) return [raw];

  const turns: string[] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(delim);
    if (textCol >= cells.length) continue;
    if (speakerCol >= 0) {
      const speaker = (cells[speakerCol] ?? '').trim().toLowerCase();
      if (!PATIENT_SPEAKERS.some((s) => speaker.includes(s))) continue;
    }
    turns.push(cells[textCol]);
  }
  return turns;
}

/** Normalized patient sentences from a raw transcript file body. */
export function transcriptSentences(raw: string): string[] {
  const sentences: string[] = [];
  for (const turn of patientTurns(raw)) {
    for (const piece of turn.split(/[.!?;\n]+/)) {
      const cleaned = normalizeText(piece);
      if (cleaned.length > 0) sentences.push(cleaned);
    }
  }
  return sentences;
}
