/**
 * Core adapter: converts a model's natural-log probabilities to surprisal
 * bits and drives the two output surfaces (line protocol, batch TSV).
 *
 * Emitted surprisals are always non-negative: tiny negative values from
 * numerical noise clamp to zero with a warning on stderr.
 */

import { writeFileSync } from "node:fs";

import { LanguageModel, TokenLnProbs } from "./models.js";

const LN2 = Math.log(2);

export interface AdapterConfig {
  model: string;
  device: string;
  eosIncluded: boolean;
  batchSize: number;
}

export const DEFAULT_CONFIG: Omit<AdapterConfig, "model"> = {
  device: "cpu",
  eosIncluded: true,
  batchSize: 8,
};

export interface ScoredText {
  tokens: string[];
  surprisalBits: number[];
}

let warnedNegative = false;

function toBits(lnProb: number, context: string): number {
  const bits = -lnProb / LN2;
  if (bits < 0) {
    if (!warnedNegative) {
      process.stderr.write(
        `warning: clamped negative surprisal ${bits} to 0 (${context}); ` +
          "further clamps are silent\n"
      );
      warnedNegative = true;
    }
    return 0;
  }
  if (!Number.isFinite(bits)) {
    throw new Error(`model produced a non-finite surprisal (${context})`);
  }
  return bits;
}

export function scoreText(model: LanguageModel, text: string, eosIncluded: boolean): ScoredText {
  const { tokens, lnProbs }: TokenLnProbs = model.score(text, eosIncluded);
  if (tokens.length !== lnProbs.length) {
    throw new Error(`model returned ${lnProbs.length} probabilities for ${tokens.length} tokens`);
  }
  return {
    tokens,
    surprisalBits: lnProbs.map((p, i) => toBits(p, `token ${i} of ${JSON.stringify(text)}`)),
  };
}

export function scoreBatch(
  model: LanguageModel,
  texts: string[],
  eosIncluded: boolean,
  batchSize: number
): ScoredText[] {
  if (batchSize < 1) throw new Error(`batch size must be >= 1, got ${batchSize}`);
  const out: ScoredText[] = [];
  for (let start = 0; start < texts.length; start += batchSize) {
    const chunk = texts.slice(start, start + batchSize);
    if (model.scoreBatch) {
      const results = model.scoreBatch(chunk, eosIncluded);
      for (let i = 0; i < chunk.length; i++) {
        const { tokens, lnProbs } = results[i];
        out.push({
          tokens,
          surprisalBits: lnProbs.map((p, j) => toBits(p, `token ${j}`)),
        });
      }
    } else {
      for (const text of chunk) out.push(scoreText(model, text, eosIncluded));
    }
  }
  return out;
}

interface ExperimentFile {
  factors: { name: string; levels: string[]; scope?: string }[];
  items: { id: string; cells: Record<string, string> }[];
}

/** Condition keys in declared within-item grid order, matching the primary's
 * experiment schema. */
export function conditionKeys(exp: ExperimentFile): string[] {
  const within = exp.factors.filter((f) => (f.scope ?? "within_item") === "within_item");
  let keys: string[] = [""];
  for (const factor of within) {
    const next: string[] = [];
    for (const prefix of keys) {
      for (const level of factor.levels) {
        next.push(prefix === "" ? level : `${prefix}|${level}`);
      }
    }
    keys = next;
  }
  return keys;
}

export function batchScoreExperiment(
  model: LanguageModel,
  config: Omit<AdapterConfig, "model">,
  exp: ExperimentFile,
  outPath: string
): number {
  const keys = conditionKeys(exp);
  const ids: string[] = [];
  const texts: string[] = [];
  for (const item of exp.items) {
    for (const key of keys) {
      const sentence = item.cells[key];
      if (sentence === undefined) {
        throw new Error(`item ${item.id} has no cell ${key}`);
      }
      ids.push(`${item.id}::${key}`);
      texts.push(sentence);
    }
  }
  const scored = scoreBatch(model, texts, config.eosIncluded, config.batchSize);
  const lines: string[] = [
    `#backend_id=${sanitizeBackendId(model.id)} eos_included=${config.eosIncluded}`,
    "sentence_id\ttoken_index\ttoken\tsurprisal_bits",
  ];
  for (let i = 0; i < ids.length; i++) {
    const { tokens, surprisalBits } = scored[i];
    for (let j = 0; j < tokens.length; j++) {
      lines.push(`${ids[i]}\t${j}\t${tokens[j]}\t${surprisalBits[j]}`);
    }
  }
  writeFileSync(outPath, lines.join("\n") + "\n", "utf-8");
  return ids.length;
}

/** backend_id lives on a space-separated header line; keep it one word. */
export function sanitizeBackendId(id: string): string {
  return id.replace(/\s+/g, "_");
}
