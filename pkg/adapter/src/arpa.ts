/**
 * Minimal ARPA backoff model reader and query engine.
 *
 * Supports wrapping an n-gram model (e.g. one trained by the primary
 * pipeline) behind the adapter as a deterministic test double for the
 * protocol. Queries follow standard backoff semantics: longest stored match
 * wins; absent contexts back off with weight 1.
 */

import { readFileSync } from "node:fs";

export const BOS = "<s>";
export const EOS = "</s>";
export const UNK = "<unk>";

const SEP = "";
const LN10 = Math.log(10);

interface Entry {
  logp: number; // log10
  bow: number | null; // log10
}

export class ArpaModel {
  readonly order: number;
  private readonly levels: Map<string, Entry>[];
  private readonly vocab: Set<string>;

  constructor(order: number, levels: Map<string, Entry>[], vocab: Set<string>) {
    this.order = order;
    this.levels = levels;
    this.vocab = vocab;
  }

  static fromFile(path: string): ArpaModel {
    const lines = readFileSync(path, "utf-8").split(/\r?\n/);
    let i = 0;
    while (i < lines.length && lines[i].trim() !== "\\data\\") {
      if (lines[i].trim().length > 0) throw new Error(`expected \\data\\ header in ${path}`);
      i++;
    }
    if (i === lines.length) throw new Error(`no \\data\\ header in ${path}`);
    i++;
    const declared = new Map<number, number>();
    for (; i < lines.length; i++) {
      const line = lines[i].trim();
      if (line.length === 0) continue;
      const m = /^ngram (\d+)\s*=\s*(\d+)$/.exec(line);
      if (!m) break;
      declared.set(Number(m[1]), Number(m[2]));
    }
    if (declared.size === 0) throw new Error(`no ngram counts declared in ${path}`);
    const order = Math.max(...declared.keys());
    const levels: Map<string, Entry>[] = Array.from({ length: order + 1 }, () => new Map());
    let current = 0;
    for (; i < lines.length; i++) {
      const line = lines[i].trim();
      if (line.length === 0) continue;
      if (line === "\\end\\") break;
      const section = /^\\(\d+)-grams:$/.exec(line);
      if (section) {
        current = Number(section[1]);
        continue;
      }
      if (current === 0) throw new Error(`entry outside a section at line ${i + 1}`);
      const fields = line.split("\t");
      let logp: number;
      let gram: string[];
      let bow: number | null;
      if (fields.length >= 2) {
        logp = Number(fields[0]);
        gram = fields[1].split(/\s+/);
        bow = fields.length > 2 ? Number(fields[2]) : null;
      } else {
        const parts = line.split(/\s+/);
        logp = Number(parts[0]);
        if (parts.length === current + 2) {
          gram = parts.slice(1, -1);
          bow = Number(parts[parts.length - 1]);
        } else {
          gram = parts.slice(1);
          bow = null;
        }
      }
      if (!Number.isFinite(logp) || (bow !== null && !Number.isFinite(bow))) {
        throw new Error(`non-numeric field at line ${i + 1} of ${path}`);
      }
      if (gram.length !== current) {
        throw new Error(`expected ${current}-gram at line ${i + 1} of ${path}`);
      }
      levels[current].set(gram.join(SEP), { logp, bow });
    }
    const vocab = new Set<string>();
    for (const key of levels[1].keys()) vocab.add(key);
    if (!vocab.has(UNK)) {
      levels[1].set(UNK, { logp: -10, bow: null });
      vocab.add(UNK);
    }
    return new ArpaModel(order, levels, vocab);
  }

  private resolve(token: string): string {
    if (token === BOS) return token;
    return this.vocab.has(token) ? token : UNK;
  }

  /** log10 p(word | context) under backoff semantics. */
  log10Prob(word: string, context: string[]): number {
    const w = word === BOS ? UNK : this.resolve(word);
    let ctx = context.map((t) => this.resolve(t));
    if (ctx.length > this.order - 1) ctx = ctx.slice(ctx.length - (this.order - 1));
    return this.lookup(w, ctx);
  }

  private lookup(word: string, ctx: string[]): number {
    const hit = this.levels[ctx.length + 1].get([...ctx, word].join(SEP));
    if (hit !== undefined) return hit.logp;
    if (ctx.length === 0) {
      return this.levels[1].get(UNK)!.logp;
    }
    const stored = this.levels[ctx.length].get(ctx.join(SEP));
    const bow = stored && stored.bow !== null ? stored.bow : 0;
    return bow + this.lookup(word, ctx.slice(1));
  }

  /** Natural-log probability, the unit the adapter's model API speaks. */
  lnProb(word: string, context: string[]): number {
    return this.log10Prob(word, context) * LN10;
  }
}
