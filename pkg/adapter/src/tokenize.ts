/**
 * Tokenizers for the bundled models. Mirrors the pipeline's registered
 * schemes so an ARPA-backed model scores text the same way the primary's
 * native backend does.
 */

// ASCII punctuation, same set as Python's string.punctuation.
const PUNCT = new Set("!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~".split(""));

export function whitespace(sentence: string): string[] {
  return sentence.split(/\s+/).filter((t) => t.length > 0);
}

export function punctSplitLowercase(sentence: string): string[] {
  const tokens: string[] = [];
  for (let chunk of whitespace(sentence)) {
    const lead: string[] = [];
    const trail: string[] = [];
    while (chunk.length > 0 && PUNCT.has(chunk[0])) {
      lead.push(chunk[0]);
      chunk = chunk.slice(1);
    }
    while (chunk.length > 0 && PUNCT.has(chunk[chunk.length - 1])) {
      trail.push(chunk[chunk.length - 1]);
      chunk = chunk.slice(0, -1);
    }
    tokens.push(...lead);
    if (chunk.length > 0) tokens.push(chunk.toLowerCase());
    tokens.push(...trail.reverse());
  }
  return tokens;
}
