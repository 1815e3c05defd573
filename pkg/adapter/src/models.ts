/**
 * The model surface the adapter wraps: any autoregressive scorer that can
 * tokenize text with its own tokenizer and return per-token natural-log
 * conditional probabilities. Two reference implementations ship here; real
 * neural bindings implement the same interface.
 */

import { ArpaModel, BOS, EOS } from "./arpa.js";
import { punctSplitLowercase, whitespace } from "./tokenize.js";

export interface TokenLnProbs {
  tokens: string[];
  lnProbs: number[];
}

export interface LanguageModel {
  readonly id: string;
  /** Tokenize with the model's own tokenizer and score each position. */
  score(text: string, eosIncluded: boolean): TokenLnProbs;
  /** Optional batched entry point; the default maps over score(). */
  scoreBatch?(texts: string[], eosIncluded: boolean): TokenLnProbs[];
}

/** Uniform distribution over a fixed-size vocabulary: every token costs
 * log2(V) bits. Whitespace tokenization. */
export class UniformModel implements LanguageModel {
  readonly id: string;
  private readonly lnP: number;

  constructor(readonly vocabSize: number) {
    if (!Number.isInteger(vocabSize) || vocabSize < 1) {
      throw new Error(`uniform model needs a positive vocabulary size, got ${vocabSize}`);
    }
    this.id = `uniform:${vocabSize}`;
    this.lnP = -Math.log(vocabSize);
  }

  score(text: string, eosIncluded: boolean): TokenLnProbs {
    const tokens = whitespace(text);
    if (eosIncluded) tokens.push(EOS);
    return { tokens, lnProbs: tokens.map(() => this.lnP) };
  }
}

/** An ARPA-backed n-gram model: deterministic, and exactly comparable with
 * the primary pipeline's native backend on the same file. */
export class ArpaBackedModel implements LanguageModel {
  readonly id: string;
  private readonly model: ArpaModel;

  constructor(path: string) {
    this.model = ArpaModel.fromFile(path);
    this.id = `arpa:${path}`;
  }

  score(text: string, eosIncluded: boolean): TokenLnProbs {
    const words = punctSplitLowercase(text);
    const scored = eosIncluded ? [...words, EOS] : words;
    const context: string[] = Array(this.model.order - 1).fill(BOS);
    const lnProbs: number[] = [];
    for (const token of scored) {
      lnProbs.push(this.model.lnProb(token, context));
      context.push(token);
    }
    return { tokens: scored, lnProbs };
  }
}

/** Parse a model identifier: "uniform:<V>" or "arpa:<path>". */
export function loadModel(identifier: string): LanguageModel {
  const sep = identifier.indexOf(":");
  const kind = sep < 0 ? identifier : identifier.slice(0, sep);
  const rest = sep < 0 ? "" : identifier.slice(sep + 1);
  switch (kind) {
    case "uniform":
      return new UniformModel(Number(rest));
    case "arpa":
      if (!rest) throw new Error("arpa model needs a file path: arpa:<path>");
      return new ArpaBackedModel(rest);
    default:
      throw new Error(`unknown model identifier ${identifier} (try uniform:<V> or arpa:<path>)`);
  }
}
