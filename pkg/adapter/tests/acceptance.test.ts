/**
 * Adapter acceptance: uniform exactness, batch-size invariance, and the
 * protocol round-trip against the primary pipeline, consumed strictly
 * through its external interfaces (CLI + TSV + ARPA).
 */

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import path from "node:path";
import { fileURLToPath } from "node:url";

import { beforeAll, describe, expect, it } from "vitest";

import { batchScoreExperiment, scoreBatch, scoreText } from "../src/adapter.js";
import { ArpaBackedModel, UniformModel } from "../src/models.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const CLI = path.join(HERE, "..", "dist", "cli.js");
const PYTHON = process.env.ORDERLAB_PYTHON ?? "python3";

const CORPUS_LINES: string[] = [];
const SUBJECTS = ["critic", "editor", "farmer"];
const VERBS = ["praised", "reviewed"];
const OBJECTS = ["play", "novel", "garden", "statue"];
const DAYS = ["monday", "friday"];
for (let i = 0; i < 400; i++) {
  const s = SUBJECTS[i % SUBJECTS.length];
  const v = VERBS[i % VERBS.length];
  const o = OBJECTS[i % OBJECTS.length];
  const d = DAYS[(i >> 2) % DAYS.length];
  const long = i % 2 === 0;
  const np = long ? `the fine old ${o} that nobody expected` : `the ${o}`;
  const shifted = i % 3 === 0;
  CORPUS_LINES.push(
    shifted
      ? `the ${s} ${v} on ${d} ${np} .`
      : `the ${s} ${v} ${np} on ${d} .`
  );
}

function experimentJson() {
  const items = [];
  for (let k = 0; k < 2; k++) {
    const o = OBJECTS[k];
    items.push({
      id: `item${k + 1}`,
      cells: {
        "std|short": `the critic praised the ${o} on monday .`,
        "std|long": `the critic praised the fine old ${o} that nobody expected on monday .`,
        "shifted|short": `the critic praised on monday the ${o} .`,
        "shifted|long": `the critic praised on monday the fine old ${o} that nobody expected .`,
      },
    });
  }
  return {
    name: "adapter-roundtrip",
    factors: [
      { name: "order", levels: ["std", "shifted"], scope: "within_item", is_order_factor: true },
      { name: "np_length", levels: ["short", "long"], scope: "within_item" },
    ],
    items,
  };
}

function totalsFromTsv(tsv: string): Map<string, number> {
  const totals = new Map<string, number>();
  for (const line of tsv.split("\n").slice(2)) {
    if (!line.trim()) continue;
    const [sid, , , bits] = line.split("\t");
    totals.set(sid, (totals.get(sid) ?? 0) + Number(bits));
  }
  return totals;
}

describe("A9 adapter conformance", () => {
  let dir: string;
  let arpaPath: string;
  let expPath: string;

  beforeAll(() => {
    dir = mkdtempSync(path.join(tmpdir(), "adapter-a9-"));
    const corpusPath = path.join(dir, "corpus.txt");
    writeFileSync(corpusPath, CORPUS_LINES.join("\n") + "\n");
    expPath = path.join(dir, "experiment.json");
    writeFileSync(expPath, JSON.stringify(experimentJson()));
    arpaPath = path.join(dir, "model.arpa");
    execFileSync(PYTHON, [
      "-m", "orderlab.cli", "train",
      "--corpus", corpusPath, "--order", "4", "--out", arpaPath,
    ], { stdio: "pipe" });
  }, 60000);

  it("uniform toy model yields log2|V| bits per token exactly", () => {
    const { surprisalBits } = scoreText(new UniformModel(16), "w x y z", false);
    expect(surprisalBits).toEqual([4, 4, 4, 4]);
    console.log("A9 PASS (uniform) — log2(16) = 4.0 bits per token exactly");
  });

  it("round-trips through the primary ingester with zero validation errors", () => {
    const tsvPath = path.join(dir, "adapter_scores.tsv");
    const model = new ArpaBackedModel(arpaPath);
    const n = batchScoreExperiment(
      model,
      { device: "cpu", eosIncluded: true, batchSize: 4 },
      experimentJson(),
      tsvPath
    );
    expect(n).toBe(8);
    const header = readFileSync(tsvPath, "utf-8").split("\n")[0];
    expect(header).toContain("eos_included=true"); // header mirrors the config

    // primary CLI ingests the adapter's TSV: exit 0 = zero validation errors
    const checkedPath = path.join(dir, "checked.tsv");
    execFileSync(PYTHON, [
      "-m", "orderlab.cli", "score",
      "--experiment", expPath, "--external-file", tsvPath, "--out", checkedPath,
    ], { stdio: "pipe" });

    // native scoring of the same experiment by the primary
    const nativePath = path.join(dir, "native_scores.tsv");
    execFileSync(PYTHON, [
      "-m", "orderlab.cli", "score",
      "--experiment", expPath, "--arpa", arpaPath, "--out", nativePath,
    ], { stdio: "pipe" });

    const adapterTotals = totalsFromTsv(readFileSync(tsvPath, "utf-8"));
    const nativeTotals = totalsFromTsv(readFileSync(nativePath, "utf-8"));
    expect(adapterTotals.size).toBe(nativeTotals.size);
    for (const [sid, total] of nativeTotals) {
      const got = adapterTotals.get(sid);
      expect(got).toBeDefined();
      expect(Math.abs((got as number) - total)).toBeLessThan(1e-6);
    }
    console.log(
      "A9 PASS (round-trip) — primary ingester accepted the TSV; wrapped n-gram totals " +
        "match native scoring within 1e-6 bits"
    );
  }, 60000);

  it("totals are invariant to batch size within 1e-4 bits", () => {
    const model = new ArpaBackedModel(arpaPath);
    const texts = experimentJson().items.flatMap((it) => Object.values(it.cells));
    const b1 = scoreBatch(model, texts, true, 1);
    const b8 = scoreBatch(model, texts, true, 8);
    for (let i = 0; i < texts.length; i++) {
      const t1 = b1[i].surprisalBits.reduce((a, b) => a + b, 0);
      const t8 = b8[i].surprisalBits.reduce((a, b) => a + b, 0);
      expect(Math.abs(t1 - t8)).toBeLessThan(1e-4);
    }
    console.log("A9 PASS (batching) — totals invariant to batch size within 1e-4 bits");
  });

  it("serve and batch agree through the protocol", async () => {
    const { spawn } = await import("node:child_process");
    const proc = spawn("node", [CLI, "serve", "--model", `arpa:${arpaPath}`,
                                "--eos-included", "true"]);
    const exp = experimentJson();
    const item = exp.items[0];
    const requests = Object.entries(item.cells).map(([key, text], i) => ({
      id: `${item.id}::${key}`,
      text,
    }));
    const responses: string[] = [];
    const done = new Promise<void>((resolve) => {
      let buffer = "";
      proc.stdout.on("data", (chunk: Buffer) => {
        buffer += chunk.toString();
        let idx;
        while ((idx = buffer.indexOf("\n")) >= 0) {
          responses.push(buffer.slice(0, idx));
          buffer = buffer.slice(idx + 1);
        }
        if (responses.length >= requests.length) resolve();
      });
    });
    for (const r of requests) proc.stdin.write(JSON.stringify(r) + "\n");
    proc.stdin.end();
    await done;
    proc.kill();

    const model = new ArpaBackedModel(arpaPath);
    for (let i = 0; i < requests.length; i++) {
      const payload = JSON.parse(responses[i]);
      expect(payload.id).toBe(requests[i].id);
      const direct = scoreText(model, requests[i].text, true);
      const served = (payload.surprisal_bits as number[]).reduce((a, b) => a + b, 0);
      const local = direct.surprisalBits.reduce((a, b) => a + b, 0);
      expect(Math.abs(served - local)).toBeLessThan(1e-9);
    }
  }, 20000);
});
