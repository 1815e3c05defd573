/**
 * Adapter entry points.
 *
 *   node dist/cli.js serve --model uniform:16 [--eos-included true|false]
 *   node dist/cli.js batch --model arpa:m.arpa --experiment exp.json \
 *       --out scores.tsv [--batch-size 8] [--device cpu]
 *
 * Model load failures exit nonzero before any request is accepted.
 */

import { readFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { DEFAULT_CONFIG, batchScoreExperiment } from "./adapter.js";
import { loadModel } from "./models.js";
import { serve } from "./serve.js";

function parseBool(raw: string | undefined, fallback: boolean): boolean {
  if (raw === undefined) return fallback;
  const low = raw.toLowerCase();
  if (["true", "1", "yes"].includes(low)) return true;
  if (["false", "0", "no"].includes(low)) return false;
  throw new Error(`expected true/false, got ${raw}`);
}

async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  if (command !== "serve" && command !== "batch") {
    process.stderr.write("usage: cli.js <serve|batch> --model <id> [options]\n");
    return 2;
  }
  const { values } = parseArgs({
    args: rest,
    options: {
      model: { type: "string" },
      device: { type: "string", default: DEFAULT_CONFIG.device },
      "eos-included": { type: "string" },
      "batch-size": { type: "string" },
      experiment: { type: "string" },
      out: { type: "string" },
    },
  });
  if (!values.model) {
    process.stderr.write("error: --model is required (uniform:<V> or arpa:<path>)\n");
    return 2;
  }
  const eosIncluded = parseBool(values["eos-included"], DEFAULT_CONFIG.eosIncluded);
  const model = loadModel(values.model); // throws -> nonzero exit before serving

  if (command === "serve") {
    await serve(model, eosIncluded);
    return 0;
  }
  if (!values.experiment || !values.out) {
    process.stderr.write("error: batch needs --experiment and --out\n");
    return 2;
  }
  const batchSize = values["batch-size"] ? Number(values["batch-size"]) : DEFAULT_CONFIG.batchSize;
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    process.stderr.write(`error: bad --batch-size ${values["batch-size"]}\n`);
    return 2;
  }
  const exp = JSON.parse(readFileSync(values.experiment, "utf-8"));
  const sentences = batchScoreExperiment(
    model,
    { device: values.device ?? "cpu", eosIncluded, batchSize },
    exp,
    values.out
  );
  process.stderr.write(`scored ${sentences} sentences -> ${values.out}\n`);
  return 0;
}

main(process.argv.slice(2))
  .then((code) => {
    process.exitCode = code;
  })
  .catch((err) => {
    process.stderr.write(`error: ${err instanceof Error ? err.message : String(err)}\n`);
    process.exitCode = 1;
  });
